"""Canonical byte encoding used for signing, sealing, and wire transport.

The rules are deliberately rigid so that two independent implementations
produce identical bytes for equal values:

  * UTF-8 JSON, no insignificant whitespace
  * object keys sorted ascending by byte order
  * integers in shortest decimal form, restricted to signed 64-bit range
  * binary fields as base64url without padding
  * timestamps as ISO-8601 UTC with a trailing ``Z``, seconds precision
  * calendar dates as ``YYYY-MM-DD``
  * no floats, no nulls; optional fields are omitted, never null
"""

from __future__ import annotations

import base64
import json
import re
from datetime import date, datetime, timezone
from typing import Any

from .errors import MalformedDocument, UnencodableValue

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

_B64URL_RE = re.compile(r"[A-Za-z0-9_-]*\Z")
_TIMESTAMP_RE = re.compile(r"\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z\Z")
_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}\Z")


def _check_tree(value: Any, path: str) -> None:
    if isinstance(value, bool):
        return
    if isinstance(value, int):
        if not INT64_MIN <= value <= INT64_MAX:
            raise UnencodableValue(f"{path}: integer outside signed 64-bit range")
        return
    if isinstance(value, float):
        raise UnencodableValue(f"{path}: floats are not encodable")
    if isinstance(value, str):
        return
    if value is None:
        raise UnencodableValue(f"{path}: null is not encodable; omit the field")
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise UnencodableValue(f"{path}: object keys must be strings")
            _check_tree(item, f"{path}.{key}")
        return
    if isinstance(value, (list, tuple)):
        for index, item in enumerate(value):
            _check_tree(item, f"{path}[{index}]")
        return
    raise UnencodableValue(f"{path}: type {type(value).__name__} is not encodable")


def canonical_bytes(tree: Any) -> bytes:
    """Encode a plain JSON tree (dict/list/str/int/bool) to canonical bytes.

    ``sort_keys`` orders by code point, which for UTF-8 coincides with byte
    order, so a plain ``json.dumps`` satisfies the key-ordering rule.
    """
    _check_tree(tree, "$")
    text = json.dumps(tree, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    return text.encode("utf-8")


def _reject_duplicate_keys(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    obj: dict[str, Any] = {}
    for key, value in pairs:
        if key in obj:
            raise MalformedDocument(f"duplicate object key {key!r}")
        obj[key] = value
    return obj


def decode_tree(data: bytes | str) -> Any:
    """Parse canonical bytes back into a plain tree, rejecting duplicate keys."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument("document is not valid UTF-8") from exc
    try:
        return json.loads(data, object_pairs_hook=_reject_duplicate_keys)
    except MalformedDocument:
        raise
    except ValueError as exc:
        raise MalformedDocument(f"document is not valid JSON: {exc}") from exc


def b64url_encode(raw: bytes) -> str:
    return base64.urlsafe_b64encode(raw).decode("ascii").rstrip("=")


def b64url_decode(text: str) -> bytes:
    if not isinstance(text, str) or not _B64URL_RE.fullmatch(text):
        raise MalformedDocument("binary field is not unpadded base64url")
    pad = (-len(text)) % 4
    if pad == 3:
        raise MalformedDocument("binary field has impossible base64url length")
    try:
        raw = base64.urlsafe_b64decode(text + "=" * pad)
    except ValueError as exc:
        raise MalformedDocument("binary field is not decodable base64url") from exc
    # Reject non-canonical trailing bits: every value must have exactly one
    # encoding, or a flipped slack bit would change the wire bytes without
    # changing the decoded value.
    if base64.urlsafe_b64encode(raw).rstrip(b"=").decode("ascii") != text:
        raise MalformedDocument("binary field is not canonical base64url")
    return raw


def encode_timestamp(value: datetime) -> str:
    if value.tzinfo is None:
        raise UnencodableValue("timestamps must be timezone-aware")
    value = value.astimezone(timezone.utc)
    if value.microsecond:
        raise UnencodableValue("timestamps carry seconds precision only")
    return value.strftime("%Y-%m-%dT%H:%M:%SZ")


def decode_timestamp(text: str) -> datetime:
    if not isinstance(text, str) or not _TIMESTAMP_RE.fullmatch(text):
        raise MalformedDocument(f"bad timestamp {text!r}")
    try:
        parsed = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ")
    except ValueError as exc:
        raise MalformedDocument(f"bad timestamp {text!r}") from exc
    return parsed.replace(tzinfo=timezone.utc)


def encode_date(value: date) -> str:
    return value.isoformat()


def decode_date(text: str) -> date:
    if not isinstance(text, str) or not _DATE_RE.fullmatch(text):
        raise MalformedDocument(f"bad calendar date {text!r}")
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise MalformedDocument(f"bad calendar date {text!r}") from exc


def expect_str(tree: Any, key: str) -> str:
    value = _expect_present(tree, key)
    if not isinstance(value, str):
        raise MalformedDocument(f"field {key!r} must be a string")
    return value


def expect_obj(tree: Any, key: str) -> dict:
    value = _expect_present(tree, key)
    if not isinstance(value, dict):
        raise MalformedDocument(f"field {key!r} must be an object")
    return value


def expect_list(tree: Any, key: str) -> list:
    value = _expect_present(tree, key)
    if not isinstance(value, list):
        raise MalformedDocument(f"field {key!r} must be an array")
    return value


def _expect_present(tree: Any, key: str) -> Any:
    if not isinstance(tree, dict):
        raise MalformedDocument("expected an object")
    if key not in tree:
        raise MalformedDocument(f"missing field {key!r}")
    return tree[key]
