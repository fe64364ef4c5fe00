"""Text serialization of keys, records and galleries, plus exhaustive top-k search.

Every document is canonical JSON (sorted keys, no whitespace) with a leading
``version`` field. Big integers are decimal strings. Sanitized vectors are
stored as base64 little-endian float64, which is bit-exact and about half
the size of 17-digit decimal text.
"""
from __future__ import annotations

import base64
import hashlib
import json
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .enroll import EnrolledRecord, ParamsMismatch
from .match import check_record, combine_tokens, finish_metric, reconstruct, segment_log_dots
from .paillier import Ciphertext, KeyPair, PrivateKey, PublicKey
from .params import ParamSet

FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _loads(data) -> dict:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise FormatError(f"malformed document: {e}") from None
    if not isinstance(doc, dict):
        raise FormatError("document is not an object")
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"unsupported version {doc.get('version')!r}")
    return doc


def _need(doc: dict, key: str):
    try:
        return doc[key]
    except KeyError:
        raise FormatError(f"missing field {key!r}") from None


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the same directory and rename on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def modulus_digest(n: int) -> str:
    return hashlib.sha256(str(n).encode()).hexdigest()


# -- keys ------------------------------------------------------------------

def public_key_doc(pub: PublicKey) -> dict:
    return {"version": FORMAT_VERSION, "kind": "public-key", "S": pub.bits, "n": str(pub.n)}


def private_key_doc(keys: KeyPair) -> dict:
    priv = keys.private
    doc = dict(public_key_doc(keys.public), kind="private-key",
               **{"lambda": str(priv.lam), "mu": str(priv.mu)})
    if priv.p is not None:
        doc.update(p=str(priv.p), q=str(priv.q))
    return doc


def parse_public_key(data) -> PublicKey:
    doc = _loads(data)
    pub = PublicKey(int(_need(doc, "n")))
    if pub.bits != int(_need(doc, "S")):
        raise FormatError("S does not match the modulus bit length")
    return pub


def parse_key_pair(data) -> KeyPair:
    doc = _loads(data)
    if doc.get("kind") != "private-key":
        raise FormatError("not a private key document")
    pub = parse_public_key(data)
    p = int(doc["p"]) if "p" in doc else None
    q = int(doc["q"]) if "q" in doc else None
    priv = PrivateKey(int(_need(doc, "lambda")), int(_need(doc, "mu")), p, q)
    if priv.lam * priv.mu % pub.n != 1:
        raise FormatError("lambda * mu != 1 mod n")
    return KeyPair(pub, priv)


def save_keys(keys: KeyPair, prefix) -> tuple[Path, Path]:
    pub_path, key_path = Path(f"{prefix}.pub"), Path(f"{prefix}.key")
    atomic_write(pub_path, dumps(public_key_doc(keys.public)) + "\n")
    atomic_write(key_path, dumps(private_key_doc(keys)) + "\n")
    return pub_path, key_path


def load_public_key(path) -> PublicKey:
    return parse_public_key(Path(path).read_text())


def load_keys(prefix) -> KeyPair:
    path = Path(f"{prefix}.key")
    if not path.exists():
        raise FileNotFoundError(f"private key {path} not found")
    return parse_key_pair(path.read_text())


# -- records ---------------------------------------------------------------

def record_doc(rec: EnrolledRecord) -> dict:
    c = np.ascontiguousarray(rec.c, dtype="<f8")
    return {
        "version": FORMAT_VERSION,
        "kind": "record",
        "fingerprint": rec.fingerprint,
        "label": rec.label,
        "d": int(c.shape[0]),
        "c": base64.b64encode(c.tobytes()).decode("ascii"),
        "t": str(rec.t_enc.value),
    }


def serialize_record(rec: EnrolledRecord) -> bytes:
    return (dumps(record_doc(rec)) + "\n").encode("utf-8")


def _record_from_doc(doc: dict) -> EnrolledRecord:
    fp = doc.get("fingerprint")
    if not fp:
        raise FormatError("record has no fingerprint")
    d = int(_need(doc, "d"))
    try:
        raw = base64.b64decode(_need(doc, "c"), validate=True)
    except ValueError:
        raise FormatError("sanitized vector is not valid base64") from None
    if len(raw) != 8 * d:
        raise FormatError(f"sanitized vector has {len(raw) // 8} values, expected {d}")
    c = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    t = _need(doc, "t")
    if not isinstance(t, str) or not t.isdigit():
        raise FormatError("ciphertext must be a decimal string")
    label = doc.get("label")
    return EnrolledRecord(c, Ciphertext(int(t)), fp, None if label is None else str(label))


def parse_record(data, params: ParamSet | None = None, pub: PublicKey | None = None) -> EnrolledRecord:
    """Parse a record; if ``params`` and ``pub`` are given, also check its fingerprint."""
    doc = _loads(data)
    if doc.get("kind") != "record":
        raise FormatError("not a record document")
    rec = _record_from_doc(doc)
    if params is not None and pub is not None:
        if rec.fingerprint != params.fingerprint(pub.n):
            raise ParamsMismatch("record fingerprint does not match the given parameters and key")
    return rec


# -- galleries -------------------------------------------------------------

@dataclass
class GalleryFile:
    params: ParamSet
    fingerprint: str
    n_digest: str
    records: list[EnrolledRecord] = field(default_factory=list)

    @classmethod
    def new(cls, params: ParamSet, pub: PublicKey) -> "GalleryFile":
        return cls(params, params.fingerprint(pub.n), modulus_digest(pub.n))

    def add(self, rec: EnrolledRecord) -> None:
        if rec.fingerprint != self.fingerprint:
            raise ParamsMismatch("record does not belong to this gallery")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def dumps(self) -> str:
        header = {
            "version": FORMAT_VERSION,
            "kind": "gallery",
            "params": self.params.to_dict(),
            "fingerprint": self.fingerprint,
            "n_digest": self.n_digest,
            "count": len(self.records),
        }
        lines = [dumps(header)] + [dumps(record_doc(r)) for r in self.records]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        atomic_write(path, self.dumps())

    @classmethod
    def loads(cls, text: str) -> "GalleryFile":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise FormatError("empty gallery file")
        head = _loads(lines[0])
        if head.get("kind") != "gallery":
            raise FormatError("not a gallery file")
        params = ParamSet.from_dict(_need(head, "params"))
        gal = cls(params, _need(head, "fingerprint"), _need(head, "n_digest"))
        for ln in lines[1:]:
            doc = _loads(ln)
            gal.add(_record_from_doc(doc))
        if len(gal) != int(head.get("count", len(gal))):
            raise FormatError("gallery entry count does not match header")
        return gal

    @classmethod
    def load(cls, path) -> "GalleryFile":
        return cls.loads(Path(path).read_text())

    def check_keys(self, pub: PublicKey) -> None:
        if self.fingerprint != self.params.fingerprint(pub.n):
            raise ParamsMismatch("gallery was built under a different key")


def gallery_scores(probe: EnrolledRecord, gallery: GalleryFile, keys: KeyPair) -> np.ndarray:
    """Protected score of ``probe`` against every entry, in insertion order."""
    params = gallery.params
    gallery.check_keys(keys.public)
    check_record(probe, keys, params)
    if not gallery.records:
        return np.empty(0)
    C = np.stack([r.c for r in gallery.records])
    log_dots, signs = segment_log_dots(C, probe.c, params)
    out = np.empty(len(gallery))
    for i, rec in enumerate(gallery.records):
        z = combine_tokens(probe.t_enc, rec.t_enc, keys, params)
        dot = reconstruct(log_dots[i], signs[i], z, params)
        out[i] = finish_metric(dot, probe.c, rec.c, params)
    return out


def gallery_topk(probe: EnrolledRecord, gallery: GalleryFile, k: int,
                 keys: KeyPair) -> list[tuple[str | None, float]]:
    """The k best entries, descending, ties in insertion order.

    "Best" is the highest score, except in Euclidean modes where it is the
    smallest distance.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = gallery_scores(probe, gallery, keys)
    key = scores if gallery.params.metric_mode.startswith("euclidean") else -scores
    order = np.argsort(key, kind="stable")[:k]
    return [(gallery.records[i].label, float(scores[i])) for i in order]


# -- feature files ---------------------------------------------------------

_SPLIT = re.compile(r"[,\s]+")


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def parse_features(text: str) -> tuple[list[str], np.ndarray]:
    """One vector per line, comma- or whitespace-separated.

    A non-numeric first token is taken as the row label; otherwise rows are
    labelled by their 1-based line number. Blank lines and ``#`` comments
    are skipped.
    """
    labels, rows, dim = [], [], None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        toks = [t for t in _SPLIT.split(line) if t]
        label = str(lineno)
        if not _is_number(toks[0]):
            label, toks = toks[0], toks[1:]
        try:
            row = [float(t) for t in toks]
        except ValueError as e:
            raise FormatError(f"line {lineno}: {e}") from None
        if dim is None:
            dim = len(row)
        elif len(row) != dim:
            raise FormatError(f"line {lineno}: expected {dim} values, got {len(row)}")
        labels.append(label)
        rows.append(row)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), dim or 0)
    return labels, X


def read_features(path) -> tuple[list[str], np.ndarray]:
    return parse_features(Path(path).read_text())


def format_features(X, labels=None) -> str:
    out = []
    for i, row in enumerate(np.asarray(X, dtype=np.float64)):
        vals = ",".join(repr(float(v)) for v in row)
        out.append(f"{labels[i]},{vals}" if labels is not None else vals)
    return "\n".join(out) + "\n"
