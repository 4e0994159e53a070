"""Datasets, the language/group taxonomy and TSV corpus I/O.

Corpora are UTF-8 files with one ``text<TAB>label`` sample per line, the
layout the DSL shared-task data ships in.  Group maps partition the task
languages into routing groups; the South African map is built in and other
maps load from ``GroupName: code1,code2`` config files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Iterable, Sequence


class CorpusError(ValueError):
    """Malformed corpus or group-map input."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownLanguageError(LookupError):
    pass


def check_code(code: str) -> str:
    if not code or code != code.lower() or any(ch.isspace() for ch in code):
        raise CorpusError(f"invalid language code {code!r}")
    return code


@dataclass(frozen=True)
class LabeledSample:
    text: str
    label: str

    def __post_init__(self):
        if not self.text.strip():
            raise CorpusError("sample text is empty")
        check_code(self.label)


@dataclass(frozen=True)
class LanguageGroup:
    name: str
    members: tuple[str, ...]

    def __post_init__(self):
        if not self.members:
            raise CorpusError(f"group {self.name!r} has no members")
        if len(set(self.members)) != len(self.members):
            raise CorpusError(f"group {self.name!r} lists a language twice")
        for code in self.members:
            check_code(code)

    @property
    def is_singleton(self) -> bool:
        return len(self.members) == 1

    def __contains__(self, code: str) -> bool:
        return code in self.members


@dataclass(frozen=True)
class GroupMap:
    """An ordered partition of the task languages into groups."""

    groups: tuple[LanguageGroup, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        names = set()
        for group in self.groups:
            if group.name in names:
                raise CorpusError(f"duplicate group name {group.name!r}")
            names.add(group.name)
            for code in group.members:
                if code in index:
                    raise CorpusError(
                        f"language {code!r} appears in groups "
                        f"{index[code].name!r} and {group.name!r}")
                index[code] = group
        object.__setattr__(self, "_index", index)

    @property
    def languages(self) -> tuple[str, ...]:
        return tuple(code for g in self.groups for code in g.members)

    def group_named(self, name: str) -> LanguageGroup:
        for group in self.groups:
            if group.name == name:
                return group
        raise KeyError(name)

    def restrict(self, languages: Iterable[str]) -> "GroupMap":
        """Drop languages not in ``languages`` (and groups left empty)."""
        keep = set(languages)
        groups = []
        for g in self.groups:
            members = tuple(c for c in g.members if c in keep)
            if members:
                groups.append(LanguageGroup(g.name, members))
        return GroupMap(tuple(groups))

    def to_text(self) -> str:
        return "".join(f"{g.name}: {','.join(g.members)}\n" for g in self.groups)


def group_of(lang: str, group_map: GroupMap) -> LanguageGroup:
    try:
        return group_map._index[lang]
    except KeyError:
        raise UnknownLanguageError(f"language {lang!r} is not in the group map") from None


def parse_group_map(text: str) -> GroupMap:
    """Parse ``GroupName: code1,code2,...`` lines; ``#`` starts a comment."""
    groups = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, rest = line.partition(":")
        if not sep or not name.strip():
            raise CorpusError("expected 'GroupName: code1,code2,...'", lineno)
        codes = tuple(c.strip().lower() for c in rest.split(",") if c.strip())
        try:
            groups.append(LanguageGroup(name.strip(), codes))
        except CorpusError as exc:
            raise CorpusError(str(exc), lineno) from None
    if not groups:
        raise CorpusError("group map is empty")
    return GroupMap(tuple(groups))


def load_group_map(path: str | os.PathLike) -> GroupMap:
    with open(path, encoding="utf-8") as fh:
        return parse_group_map(fh.read())


def builtin_group_map(name: str) -> GroupMap:
    """One of the shipped maps: ``za``, ``dsl2015`` or ``dsl2017``."""
    try:
        text = resources.files("hierlid").joinpath(f"data/{name}.groups").read_text("utf-8")
    except FileNotFoundError:
        raise KeyError(f"no built-in group map {name!r}") from None
    return parse_group_map(text)


ZA_GROUP_MAP = builtin_group_map("za")


def _text_stream(source) -> Iterable[str]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, encoding="utf-8", newline="")
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def load_tsv(source: str | os.PathLike | IO) -> list[LabeledSample]:
    """Read ``text<TAB>label`` lines from a path or byte/text stream.

    Blank lines are skipped.  The text field is kept verbatim; labels are
    stripped and lowercased.
    """
    stream = _text_stream(source)
    samples = []
    try:
        for lineno, line in enumerate(stream, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusError(f"expected exactly one TAB, found {len(parts) - 1}", lineno)
            text, label = parts
            if not text.strip():
                raise CorpusError("empty text field", lineno)
            label = label.strip().lower()
            try:
                samples.append(LabeledSample(text, label))
            except CorpusError as exc:
                raise CorpusError(str(exc), lineno) from None
    except UnicodeDecodeError as exc:
        raise CorpusError(f"not valid UTF-8: {exc}") from None
    finally:
        if isinstance(source, (str, os.PathLike)):
            stream.close()
        elif stream is not source:
            stream.detach()
    return samples


def write_tsv(samples: Iterable[LabeledSample], sink: str | os.PathLike | IO) -> None:
    if isinstance(sink, (str, os.PathLike)):
        out = open(sink, "w", encoding="utf-8", newline="")
    elif isinstance(sink, io.TextIOBase):
        out = sink
    else:
        out = io.TextIOWrapper(sink, encoding="utf-8", newline="")
    try:
        for s in samples:
            if "\t" in s.text or "\n" in s.text or "\r" in s.text:
                raise CorpusError(f"text contains TAB or newline: {s.text!r}")
            out.write(f"{s.text}\t{s.label}\n")
    finally:
        if out is not sink:
            if isinstance(sink, (str, os.PathLike)):
                out.close()
            else:
                out.flush()
                out.detach()


def convert_delimited(source, sink, text_field: str | int, label_field: str | int,
                      delimiter: str = ",") -> int:
    """Convert a delimited file (CSV, label-first TSV, ...) to corpus TSV.

    Fields are column names when the file has a header row, otherwise integer
    column indices.  Embedded tabs/newlines in the text are replaced by
    spaces.  Returns the number of samples written.
    """
    with open(source, encoding="utf-8", newline="") as fin:
        if isinstance(text_field, int) and isinstance(label_field, int):
            rows = csv.reader(fin, delimiter=delimiter)
        else:
            rows = csv.DictReader(fin, delimiter=delimiter)
        out = []
        for row in rows:
            text = " ".join(str(row[text_field]).split())
            label = str(row[label_field]).strip().lower()
            if text:
                out.append(LabeledSample(text, label))
    write_tsv(out, sink)
    return len(out)


def truncate_short(text: str, min_len: int = 15, max_len: int = 20) -> str:
    """Cut ``text`` to a short-text sample, preferring a word boundary.

    Returns the longest prefix of at most ``max_len`` characters that ends at
    a word boundary and is at least ``min_len`` long; with no such boundary
    the text is hard-cut at ``max_len``.  Texts shorter than ``min_len`` are
    returned unchanged.
    """
    if min_len > max_len:
        raise ValueError("min_len must not exceed max_len")
    if len(text) < min_len:
        return text
    if len(text) <= max_len:
        return text
    for k in range(max_len, min_len - 1, -1):
        if text[k].isspace():
            cut = text[:k].rstrip()
            if len(cut) >= min_len:
                return cut
    return text[:max_len]


@dataclass(frozen=True)
class Dataset:
    train: tuple[LabeledSample, ...]
    test: tuple[LabeledSample, ...]
    languages: frozenset[str]
    name: str = ""

    def __post_init__(self):
        for split, samples in (("train", self.train), ("test", self.test)):
            for s in samples:
                if s.label not in self.languages:
                    raise CorpusError(f"{split} label {s.label!r} not among dataset languages")

    @classmethod
    def from_samples(cls, train: Sequence[LabeledSample], test: Sequence[LabeledSample] = (),
                     name: str = "") -> "Dataset":
        langs = frozenset(s.label for s in train) | frozenset(s.label for s in test)
        return cls(tuple(train), tuple(test), langs, name)

    @classmethod
    def from_files(cls, train_path, test_path=None, name: str = "") -> "Dataset":
        train = load_tsv(train_path)
        test = load_tsv(test_path) if test_path is not None else []
        return cls.from_samples(train, test, name)

    def checksums(self) -> dict[str, str]:
        return {"train": samples_checksum(self.train), "test": samples_checksum(self.test)}


def samples_checksum(samples: Iterable[LabeledSample]) -> str:
    """SHA-256 over the canonical TSV rendering of ``samples``."""
    h = hashlib.sha256()
    for s in samples:
        h.update(f"{s.text}\t{s.label}\n".encode("utf-8"))
    return h.hexdigest()
