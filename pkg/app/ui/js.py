# app/ui/js.py
"""
JS-строки для Gradio callbacks: активная вкладка между перезагрузками и Ctrl+Enter для запуска.
"""

TAB_STORAGE_KEY = "gcn_certifier_tab"

RESTORE_TAB_JS = f"""
() => {{
  const saved = localStorage.getItem('{TAB_STORAGE_KEY}');
  if (!saved) return '';
  const tab = [...document.querySelectorAll('[role="tab"]')]
    .find(t => (t.innerText || t.textContent || '').trim().startsWith(saved));
  if (tab) tab.click();
  return '';
}}
"""


def remember_tab_js(label: str) -> str:
    return f"() => {{ localStorage.setItem('{TAB_STORAGE_KEY}', {label!r}); return ''; }}"


# Ctrl+Enter на вкладке запускает ее основную кнопку (elem_id="<tab>_run")
RUN_HOTKEY_JS = """
() => {
  if (window.__gcnRunHotkey) return;
  window.__gcnRunHotkey = (ev) => {
    if (ev.key !== 'Enter' || !ev.ctrlKey) return;
    const btn = [...document.querySelectorAll('button[id$="_run"]')].find(b => b.offsetParent !== null);
    if (!btn) return;
    ev.preventDefault();
    btn.click();
  };
  document.addEventListener('keydown', window.__gcnRunHotkey, true);
}
"""
