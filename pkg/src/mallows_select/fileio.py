"""Text formats for rankings, selection sequences, and sample profiles.

Profile files: a header line ``n,r`` or ``n,r,beta``, then one line per
sample, ``S:0,2,4|R:4,0,2``.  Selection-only files omit the ``R:`` part.
Rankings serialize as a single comma-separated line of alternatives in
rank order.  All identifiers are 0-based.
"""

from __future__ import annotations

from .core import Ranking, SampleProfile, SelectionSequence
from .sampling import verify_p_frequent


class FileFormatError(ValueError):
    """A profile or selection file violates the format or its invariants."""

    def __init__(self, errors: list[dict]):
        self.errors = errors
        super().__init__("; ".join(e["message"] for e in errors[:5]) + ("" if len(errors) <= 5 else f" (+{len(errors) - 5} more)"))


def _err(line: int, message: str, **extra) -> dict:
    rec = {"line": line, "message": message}
    rec.update(extra)
    return rec


def format_profile(profile: SampleProfile, beta: float | None = None) -> str:
    header = f"{profile.n},{len(profile)}" + (f",{beta:g}" if beta is not None else "")
    lines = [header]
    for s, rk in zip(profile.selection, profile.rankings):
        lines.append("S:" + ",".join(map(str, s)) + "|R:" + rk.to_line())
    return "\n".join(lines) + "\n"


def format_selection(selection: SelectionSequence) -> str:
    lines = [f"{selection.n},{len(selection)}"]
    for s in selection:
        lines.append("S:" + ",".join(map(str, s)))
    return "\n".join(lines) + "\n"


def _parse_header(line: str) -> tuple[int, int, float | None]:
    parts = line.strip().split(",")
    if len(parts) not in (2, 3):
        raise FileFormatError([_err(1, "header must be 'n,r' or 'n,r,beta'")])
    try:
        n, r = int(parts[0]), int(parts[1])
        beta = float(parts[2]) if len(parts) == 3 else None
    except ValueError:
        raise FileFormatError([_err(1, f"unparseable header {line.strip()!r}")]) from None
    if n < 1 or r < 0:
        raise FileFormatError([_err(1, f"header values out of range: n={n}, r={r}")])
    return n, r, beta


def collect_profile_errors(text: str, p: float | None = None) -> list[dict]:
    """Validate profile text; returns an itemized error list (empty when valid)."""
    lines = [ln for ln in text.splitlines()]
    if not lines or not lines[0].strip():
        return [_err(1, "missing header line")]
    try:
        n, r, _beta = _parse_header(lines[0])
    except FileFormatError as exc:
        return exc.errors

    errors: list[dict] = []
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != r:
        errors.append(_err(1, f"header declares r={r} but file holds {len(body)} sample lines"))
    sets = []
    for offset, raw in enumerate(body, start=2):
        line_no = offset
        part = raw.strip()
        if not part.startswith("S:"):
            errors.append(_err(line_no, "sample line must start with 'S:'"))
            continue
        payload = part[2:]
        s_text, _, r_text = payload.partition("|R:")
        try:
            s_items = [int(tok) for tok in s_text.split(",") if tok != ""]
        except ValueError:
            errors.append(_err(line_no, f"unparseable selection set {s_text!r}"))
            continue
        if len(set(s_items)) != len(s_items):
            dup = sorted({x for x in s_items if s_items.count(x) > 1})
            errors.append(_err(line_no, f"duplicate alternative {dup[0]} in selection set", item=dup[0]))
            continue
        if len(s_items) < 2:
            errors.append(_err(line_no, "selection set needs at least two alternatives"))
            continue
        bad = [x for x in s_items if x < 0 or x >= n]
        if bad:
            errors.append(_err(line_no, f"alternative {bad[0]} outside [0, {n})", item=bad[0]))
            continue
        sets.append(tuple(sorted(s_items)))
        if "|R:" not in payload:
            continue  # selection-only line is fine in a mixed audit
        try:
            r_items = [int(tok) for tok in r_text.split(",") if tok != ""]
        except ValueError:
            errors.append(_err(line_no, f"unparseable ranking {r_text!r}"))
            continue
        if len(set(r_items)) != len(r_items):
            dup = sorted({x for x in r_items if r_items.count(x) > 1})
            errors.append(_err(line_no, f"duplicate alternative {dup[0]} in ranking", item=dup[0]))
            continue
        if sorted(r_items) != sorted(s_items):
            errors.append(_err(line_no, "ranking is not a permutation of its selection set"))
    if p is not None and not errors and sets:
        report = verify_p_frequent(SelectionSequence(sets, n), p)
        if not report.ok:
            pair = report.worst_pairs()[0]
            count = int(report.counts[pair[0], pair[1]])
            errors.append(
                _err(
                    1,
                    f"sequence is not {p:g}-frequent: pair {pair} co-appears in {count}/{len(sets)} sets",
                    pair=list(pair),
                    count=count,
                )
            )
    return errors


def parse_profile(text: str) -> tuple[SampleProfile, float | None]:
    """Parse a profile file; raises FileFormatError with itemized errors."""
    errors = collect_profile_errors(text)
    if errors:
        raise FileFormatError(errors)
    lines = text.splitlines()
    n, r, beta = _parse_header(lines[0])
    sets = []
    rankings = []
    for raw in lines[1:]:
        if not raw.strip():
            continue
        payload = raw.strip()[2:]
        s_text, _, r_text = payload.partition("|R:")
        if not r_text:
            raise FileFormatError([_err(1, "profile file has selection-only lines; use parse_selection")])
        sets.append(tuple(int(tok) for tok in s_text.split(",")))
        rankings.append(Ranking(int(tok) for tok in r_text.split(",")))
    selection = SelectionSequence(sets, n)
    return SampleProfile(rankings, selection), beta


def parse_selection(text: str) -> SelectionSequence:
    errors = collect_profile_errors(text)
    if errors:
        raise FileFormatError(errors)
    lines = text.splitlines()
    n, r, _ = _parse_header(lines[0])
    sets = []
    for raw in lines[1:]:
        if not raw.strip():
            continue
        payload = raw.strip()[2:]
        s_text, _, _ = payload.partition("|R:")
        sets.append(tuple(int(tok) for tok in s_text.split(",")))
    return SelectionSequence(sets, n)
