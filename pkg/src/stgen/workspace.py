"""Turns file paths and a dialect id into a ready pipeline configuration.

The command line and the HTTP service both go through :class:`Workspace`, so a
task behaves the same whichever front end started it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .generator import DEFAULT_MAX_ITERATIONS, PipelineConfig
from .kb import APILib, CaseStore, load_apilib, load_rq2st
from .models import SchemaError, Task
from .retrieval import FixtureEmbeddings
from .st import DialectError, DialectProfile, ExternalCommandAdapter, load_dialect
from .templates import DEFAULT_TEMPLATES, TemplateSet


class ConfigError(ValueError):
    """A workspace setting points at something that does not exist or cannot be read."""


@dataclass
class Workspace:
    dialect_id: str = "codesys_st"
    apilib_path: Path | None = None
    cases_path: Path | None = None
    embeddings_path: Path | None = None
    templates_dir: Path | None = None
    dialect_dirs: tuple[Path, ...] = ()
    compiler_command: str | None = None
    artifacts_dir: Path | None = None
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    _cache: dict = field(default_factory=dict, repr=False)

    def dialect(self, dialect_id: str | None = None) -> DialectProfile:
        key = dialect_id or self.dialect_id
        if ("dialect", key) not in self._cache:
            try:
                self._cache[("dialect", key)] = load_dialect(key, self.dialect_dirs)
            except DialectError as exc:
                raise ConfigError(str(exc)) from None
        return self._cache[("dialect", key)]

    def apilib(self) -> APILib:
        if "apilib" not in self._cache:
            if self.apilib_path is None:
                self._cache["apilib"] = APILib()
            else:
                self._cache["apilib"] = _load(load_apilib, self.apilib_path, "API library")
        return self._cache["apilib"]

    def cases(self) -> CaseStore:
        if "cases" not in self._cache:
            if self.cases_path is None:
                self._cache["cases"] = CaseStore()
            else:
                self._cache["cases"] = _load(lambda p: load_rq2st(p, self.apilib()), self.cases_path, "case library")
        return self._cache["cases"]

    def embeddings(self) -> FixtureEmbeddings | None:
        if self.embeddings_path is None:
            return None
        if "embeddings" not in self._cache:
            self._cache["embeddings"] = _load(FixtureEmbeddings, self.embeddings_path, "embedding file")
        return self._cache["embeddings"]

    def templates(self) -> TemplateSet:
        return TemplateSet(self.templates_dir) if self.templates_dir else DEFAULT_TEMPLATES

    def pipeline_config(self, *, dialect_id: str | None = None, planning: bool = True, use_cases: bool = True,
                        api_rec: bool = True, self_improve: bool = True) -> PipelineConfig:
        dialect = self.dialect(dialect_id)
        compiler = None
        if self.compiler_command:
            compiler = ExternalCommandAdapter(self.compiler_command, dialect)
        return PipelineConfig(
            dialect=dialect,
            apilib=self.apilib(),
            cases=self.cases(),
            embeddings=self.embeddings(),
            compiler=compiler,
            templates=self.templates(),
            planning=planning,
            use_cases=use_cases,
            api_rec=api_rec,
            self_improve=self_improve,
            max_iterations=self.max_iterations,
            artifacts_dir=self.artifacts_dir,
        )


def _load(loader, path: Path, what: str):
    try:
        return loader(path)
    except FileNotFoundError:
        raise ConfigError(f"{what} not found: {path}") from None
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load {what} {path}: {exc}") from None


def read_task(path: str | Path) -> Task:
    """Read one task object from a JSON file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return Task.from_dict(data)
    except FileNotFoundError:
        raise ConfigError(f"task file not found: {path}") from None
    except (json.JSONDecodeError, SchemaError) as exc:
        raise ConfigError(f"bad task file {path}: {exc}") from None
