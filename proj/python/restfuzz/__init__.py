"""Stateful REST API fuzzer.

Thin wrappers over the native module that decode JSON results.
"""

import json
from typing import List, Optional

from . import _restfuzz
from ._restfuzz import (  # noqa: F401
    BlogService,
    BucketNotFound,
    ConfigError,
    StorageFailure,
    Error,
    GrammarFormatError,
    MalformedDocument,
    MissingDictionaryKind,
    TargetUnreachable,
    UnsupportedVersion,
    blog_swagger,
    bucket_id_for,
    render,
    run_cli,
)


def compile_spec(document: str, overrides: Optional[str] = None, dictionary: Optional[str] = None,
                 include_optional: Optional[List[str]] = None) -> dict:
    """Compile a Swagger 2.0 document (YAML or JSON text) into a grammar."""
    return json.loads(_restfuzz.compile(document, overrides, dictionary, include_optional or []))


def fuzz(grammar, host: str, port: int, **options) -> dict:
    """Run a fuzzing session. ``grammar`` is a dict or grammar JSON text.

    Returns the report with an extra ``buckets`` list of
    ``{"id", "sequence"}`` entries.
    """
    text = grammar if isinstance(grammar, str) else json.dumps(grammar)
    report_json, buckets = _restfuzz.fuzz(text, host, port, **options)
    report = json.loads(report_json)
    report["buckets"] = [{"id": b, "sequence": list(seq)} for b, seq in buckets]
    return report


def _enter(self):
    return self


def _exit(self, *exc):
    self.stop()
    return False


BlogService.__enter__ = _enter
BlogService.__exit__ = _exit
