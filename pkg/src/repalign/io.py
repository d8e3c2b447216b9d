"""CSV readers and writers for embeddings, similarity matrices and labels.

Embedding files have a header row whose first column is ``id`` followed by
``d`` numeric columns.  Similarity files are square: the header row and the
first column both list the stimulus ids.  All files are UTF-8 with LF endings.
"""

from __future__ import annotations

import csv
import hashlib
from pathlib import Path

import numpy as np

from .core import Agent, EmbeddingAgent, EmbeddingSet, SimilarityAgent, StimulusSet
from .errors import InputError


def file_digest(path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [(lineno, row) for lineno, row in enumerate(csv.reader(fh), start=1) if row]
    if not rows:
        raise InputError(f"{path}: empty file")
    return path, rows


def _parse_float(path, lineno, value):
    try:
        x = float(value)
    except ValueError:
        raise InputError(f"{path}:{lineno}: non-numeric value {value!r}") from None
    if not np.isfinite(x):
        raise InputError(f"{path}:{lineno}: non-finite value {value!r}")
    return x


def _body(path, rows, width):
    ids, values = [], []
    for lineno, row in rows[1:]:
        if len(row) != width:
            raise InputError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        ids.append(row[0].strip())
        values.append([_parse_float(path, lineno, v) for v in row[1:]])
    return ids, values


def _looks_like_similarity(rows):
    header_ids = [h.strip() for h in rows[0][1][1:]]
    row_ids = [r[0].strip() for _, r in rows[1:] if r]
    return len(header_ids) == len(row_ids) and set(header_ids) == set(row_ids)


def read_embedding_csv(path) -> EmbeddingSet:
    path, rows = _read_rows(path)
    header = rows[0][1]
    if header[0].strip() != "id":
        raise InputError(f"{path}:{rows[0][0]}: first header column must be 'id'")
    if len(header) < 2:
        raise InputError(f"{path}:{rows[0][0]}: no coordinate columns")
    ids, values = _body(path, rows, len(header))
    if not ids:
        raise InputError(f"{path}: no data rows")
    return EmbeddingSet(StimulusSet(ids), np.array(values, dtype=float))


def read_similarity_csv(path) -> SimilarityAgent:
    path, rows = _read_rows(path)
    header = [h.strip() for h in rows[0][1]]
    ids, values = _body(path, rows, len(header))
    col_ids = header[1:]
    if sorted(col_ids) != sorted(ids) or len(set(col_ids)) != len(col_ids):
        raise InputError(f"{path}: header ids do not match row ids")
    sim = np.array(values, dtype=float)
    order = [col_ids.index(i) for i in ids]
    sim = sim[:, order]
    if not np.array_equal(sim, sim.T):
        raise InputError(f"{path}: similarity matrix is not symmetric")
    return SimilarityAgent(StimulusSet(ids), sim)


def read_agent_csv(path, fmt: str = "auto", metric: str = "euclidean") -> Agent:
    """Load an agent from an embedding or similarity CSV."""
    if fmt == "auto":
        _, rows = _read_rows(path)
        fmt = "similarity" if _looks_like_similarity(rows) else "embedding"
    if fmt == "embedding":
        return EmbeddingAgent(read_embedding_csv(path), metric)
    if fmt == "similarity":
        return read_similarity_csv(path)
    raise InputError(f"unknown file format {fmt!r}")


def reorder_agent(agent: Agent, ids) -> Agent:
    """Return ``agent`` with stimuli permuted into the order of ``ids``."""
    ids = list(ids)
    if list(agent.stimuli.ids) == ids:
        return agent
    pos = {s: i for i, s in enumerate(agent.stimuli.ids)}
    order = np.array([pos[s] for s in ids])
    if isinstance(agent, SimilarityAgent):
        return SimilarityAgent(StimulusSet(ids), agent.similarity[np.ix_(order, order)])
    if isinstance(agent, EmbeddingAgent):
        return EmbeddingAgent(EmbeddingSet(StimulusSet(ids), agent.embedding.coords[order]), agent.metric)
    raise InputError(f"cannot reorder agent of kind {agent.kind!r}")


def read_labels_csv(path, ids=None) -> np.ndarray:
    """Read ``id,label`` rows; labels are returned in the order of ``ids``."""
    path, rows = _read_rows(path)
    header = [h.strip() for h in rows[0][1]]
    if header[:2] != ["id", "label"]:
        raise InputError(f"{path}:{rows[0][0]}: header must be 'id,label'")
    found = {}
    for lineno, row in rows[1:]:
        if len(row) != 2:
            raise InputError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
        try:
            found[row[0].strip()] = int(row[1])
        except ValueError:
            raise InputError(f"{path}:{lineno}: label must be an integer, got {row[1]!r}") from None
    if ids is None:
        return np.array(list(found.values()), dtype=int)
    missing = [i for i in ids if i not in found]
    if missing:
        raise InputError(f"{path}: no label for ids {missing[:5]}")
    return np.array([found[i] for i in ids], dtype=int)


def _fmt(x) -> str:
    return repr(float(x))


def write_embedding_csv(path, embedding: EmbeddingSet):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"x{c}" for c in range(embedding.d)])
        for sid, row in zip(embedding.stimuli.ids, embedding.coords):
            w.writerow([sid] + [_fmt(v) for v in row])


def write_similarity_csv(path, agent: Agent):
    sim = agent.similarity_matrix()
    ids = list(agent.stimuli.ids)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + ids)
        for sid, row in zip(ids, sim):
            w.writerow([sid] + [_fmt(v) for v in row])


def write_labels_csv(path, ids, labels):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label"])
        for sid, lab in zip(ids, labels):
            w.writerow([sid, int(lab)])


def write_table_csv(path, columns, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return _fmt(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v
