"""Prompt templates.

Templates are plain ``string.Template`` files (``$name`` placeholders). A
directory passed as ``override_dir`` shadows the packaged files by file name.
"""
from __future__ import annotations

from pathlib import Path
from string import Template

PACKAGE_DIR = Path(__file__).parent


class TemplateSet:
    def __init__(self, override_dir: str | Path | None = None):
        self.override_dir = Path(override_dir) if override_dir else None
        self._cache: dict[str, Template] = {}

    def path_for(self, name: str) -> Path:
        if self.override_dir is not None:
            candidate = self.override_dir / f"{name}.txt"
            if candidate.is_file():
                return candidate
        path = PACKAGE_DIR / f"{name}.txt"
        if not path.is_file():
            raise FileNotFoundError(f"no prompt template named {name!r}")
        return path

    def get(self, name: str) -> Template:
        if name not in self._cache:
            self._cache[name] = Template(self.path_for(name).read_text(encoding="utf-8"))
        return self._cache[name]

    def render(self, template: str, /, **values) -> str:
        return self.get(template).substitute(**values).strip() + "\n"


DEFAULT_TEMPLATES = TemplateSet()
