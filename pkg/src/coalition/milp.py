"""Integer-programming formulations of stable community detection.

Two model families are built symbolically:

* :func:`build_f_sh_jk` maximises the summed Shapley values over up to
  ``n_c`` stable, mutually non-nested coalitions (raw weights).
* :func:`build_f_sh_mod` counts each co-member pair once through ``y``
  variables, caps memberships per node at ``p`` and uses a stability row
  that relaxes to a vacuous bound when ``x_ik = 0`` (modular weights).

Models export to LP text for an external solver; solutions come back as
``name value`` lines. :func:`brute_force_optimum` solves tiny instances by
enumeration and serves as the reference for both families.
"""
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple
import warnings

import numpy as np

from .stability import (CommunityStructure, STABILITY_TOL, canonical_order,
                        validate_structure)
from .weights import APPROX, EXACT, RAW, WeightMatrix, as_array

BINARY = "binary"
CONTINUOUS = "continuous"

F_SH_JK = "F_Sh-JK"
F_SH_MOD_EXACT = "F*_Sh-Mod"
F_SH_MOD_APPROX = "F'_Sh-Mod"

BRUTE_FORCE_LIMIT = 20


class MilpDomainError(ValueError):
    pass


class SolutionParseWarning(UserWarning):
    pass


class BruteForceLimitError(MilpDomainError):
    pass


class NoFeasibleStructureError(MilpDomainError):
    pass


@dataclass
class Constraint:
    name: str
    terms: list  # [(variable name, coefficient)]
    sense: str  # "<=" or ">="
    rhs: float

    def lhs(self, values):
        return sum(c * values.get(v, 0.0) for v, c in self.terms)

    def satisfied(self, values, tol=1e-7):
        lhs = self.lhs(values)
        if self.sense == "<=":
            return lhs <= self.rhs + tol
        return lhs >= self.rhs - tol


@dataclass
class MilpModel:
    tag: str
    n: int
    n_c: int
    p: int = None
    variables: dict = field(default_factory=dict)  # name -> kind, insertion ordered
    constraints: list = field(default_factory=list)
    objective: list = field(default_factory=list)  # [(variable name, coefficient)]
    weights: WeightMatrix = field(default=None, repr=False)

    def add_var(self, name, kind):
        self.variables[name] = kind

    def add_constraint(self, name, terms, sense, rhs):
        self.constraints.append(Constraint(name, terms, sense, float(rhs)))

    def family(self, prefix):
        return [v for v in self.variables if v.startswith(prefix + "_")]

    def objective_value(self, values):
        return sum(c * values.get(v, 0.0) for v, c in self.objective)

    def violated(self, values, tol=1e-7):
        return [c.name for c in self.constraints if not c.satisfied(values, tol)]


def x_name(i, k):
    return f"x_{i}_{k + 1}"


def z_name(i, j, k):
    return f"z_{i}_{j}_{k + 1}"


def h_name(i, k, r):
    return f"h_{i}_{k + 1}_{r + 1}"


def y_name(i, j):
    return f"y_{i}_{j}"


def _check_sizes(n_c, p=1):
    if int(n_c) != n_c or n_c < 1:
        raise MilpDomainError(f"n_c must be a positive integer, got {n_c}")
    if p is not None and (int(p) != p or p < 1):
        raise MilpDomainError(f"p must be a positive integer, got {p}")


def _declare_core(model, n, n_c):
    for i in range(n):
        for k in range(n_c):
            model.add_var(x_name(i, k), BINARY)
    for i, j in combinations(range(n), 2):
        for k in range(n_c):
            model.add_var(z_name(i, j, k), CONTINUOUS)


def _z_links(model, i, j, k):
    z, xi, xj = z_name(i, j, k), x_name(i, k), x_name(j, k)
    model.add_constraint(f"zlink_i_{i}_{j}_{k + 1}", [(z, 1.0), (xi, -1.0)], "<=", 0)
    model.add_constraint(f"zlink_j_{i}_{j}_{k + 1}", [(z, 1.0), (xj, -1.0)], "<=", 0)
    model.add_constraint(f"zlink_both_{i}_{j}_{k + 1}",
                         [(xi, 1.0), (xj, 1.0), (z, -1.0)], "<=", 1)


def _symmetry_and_cover(model, n, n_c):
    for k in range(n_c - 1):
        terms = [(x_name(i, k), 1.0) for i in range(n)]
        terms += [(x_name(i, k + 1), -1.0) for i in range(n)]
        model.add_constraint(f"order_{k + 1}", terms, ">=", 0)
    for i in range(n):
        model.add_constraint(f"cover_{i}", [(x_name(i, k), 1.0) for k in range(n_c)], ">=", 1)


def build_f_sh_jk(w, n_c):
    """Shapley-sum model over raw weights with explicit non-inclusion rows."""
    _check_sizes(n_c)
    W = as_array(w)
    n = W.shape[0]
    model = MilpModel(F_SH_JK, n, int(n_c), None, weights=w)
    _declare_core(model, n, n_c)
    for i in range(n):
        for k in range(n_c):
            for r in range(k + 1, n_c):
                model.add_var(h_name(i, k, r), CONTINUOUS)

    for i, j in combinations(range(n), 2):
        if W[i, j] == 0.0:
            continue
        for k in range(n_c):
            _z_links(model, i, j, k)
    for i in range(n):
        half = float(W[i].sum() - W[i, i]) / 2.0
        for k in range(n_c):
            terms = [(x_name(j, k), float(W[i, j])) for j in range(n)
                     if j != i and W[i, j] != 0.0]
            terms.append((x_name(i, k), -half))
            model.add_constraint(f"stable_{i}_{k + 1}", terms, ">=", 0)
    for k in range(n_c):
        for r in range(k + 1, n_c):
            hs = [(h_name(j, k, r), 1.0) for j in range(n)]
            for i in range(n):
                model.add_constraint(f"distinct_{i}_{k + 1}_{r + 1}",
                                     hs + [(x_name(i, r), -1.0)], ">=", 0)
    _symmetry_and_cover(model, n, n_c)
    for i in range(n):
        for k in range(n_c):
            for r in range(k + 1, n_c):
                h, xk, xr = h_name(i, k, r), x_name(i, k), x_name(i, r)
                tail = f"{i}_{k + 1}_{r + 1}"
                model.add_constraint(f"hlink_out_{tail}", [(h, 1.0), (xk, 1.0)], "<=", 1)
                model.add_constraint(f"hlink_in_{tail}", [(h, 1.0), (xr, -1.0)], "<=", 0)
                model.add_constraint(f"hlink_both_{tail}",
                                     [(xr, 1.0), (xk, -1.0), (h, -1.0)], "<=", 0)

    for i, j in combinations(range(n), 2):
        if W[i, j] != 0.0:
            for k in range(n_c):
                model.objective.append((z_name(i, j, k), float(W[i, j])))
    return model


def build_f_sh_mod(w, n_c, p):
    """Pair-once model over modular weights with a membership cap ``p``."""
    _check_sizes(n_c, p)
    W = as_array(w)
    n = W.shape[0]
    variant = w.variant if isinstance(w, WeightMatrix) else EXACT
    if variant == RAW:
        raise MilpDomainError("the pair-once model expects modular (exact or approx) weights")
    tag = F_SH_MOD_APPROX if variant == APPROX else F_SH_MOD_EXACT
    model = MilpModel(tag, n, int(n_c), int(p), weights=w)
    _declare_core(model, n, n_c)
    for i, j in combinations(range(n), 2):
        model.add_var(y_name(i, j), CONTINUOUS)

    for i, j in combinations(range(n), 2):
        for k in range(n_c):
            _z_links(model, i, j, k)
    _symmetry_and_cover(model, n, n_c)
    for i in range(n):
        row = np.delete(W[i], i)
        half = float(row.sum()) / 2.0
        negative = float(row[row < 0].sum())
        for k in range(n_c):
            terms = [(x_name(j, k), float(W[i, j])) for j in range(n)
                     if j != i and W[i, j] != 0.0]
            terms.append((x_name(i, k), negative - half))
            model.add_constraint(f"stable_{i}_{k + 1}", terms, ">=", negative)
    for i in range(n):
        model.add_constraint(f"cap_{i}", [(x_name(i, k), 1.0) for k in range(n_c)], "<=", p)
    for i, j in combinations(range(n), 2):
        y = y_name(i, j)
        for k in range(n_c):
            model.add_constraint(f"pair_low_{i}_{j}_{k + 1}",
                                 [(y, 1.0), (x_name(i, k), -1.0), (x_name(j, k), -1.0)],
                                 ">=", -1)
        model.add_constraint(f"pair_up_{i}_{j}",
                             [(y, 1.0)] + [(z_name(i, j, k), -1.0) for k in range(n_c)],
                             "<=", 0)

    for i, j in combinations(range(n), 2):
        if W[i, j] != 0.0:
            model.objective.append((y_name(i, j), float(W[i, j])))
    return model


# --- LP text ------------------------------------------------------------------

_LINE_WIDTH = 78


def _fmt_coef(c):
    s = repr(float(c))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def _fmt_terms(terms):
    out = []
    for v, c in terms:
        sign = "-" if c < 0 or (c == 0 and str(c).startswith("-")) else "+"
        out.append(f"{sign} {_fmt_coef(abs(c))} {v}")
    return out


def _wrap(head, pieces):
    lines = []
    cur = head
    for piece in pieces:
        if len(cur) + 1 + len(piece) > _LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + piece
        else:
            cur = f"{cur} {piece}" if cur else piece
    lines.append(cur)
    return lines


def export_lp(model):
    """LP-format text for ``model``; identical models give identical bytes."""
    lines = [f"\\ {model.tag} n={model.n} n_c={model.n_c}"
             + (f" p={model.p}" if model.p is not None else ""), "Maximize"]
    obj = [(v, c) for v, c in model.objective if c != 0.0]
    if obj:
        lines += _wrap(" obj:", _fmt_terms(obj))
    else:
        first = next(iter(model.variables))
        lines.append(f" obj: 0 {first}")
    lines.append("Subject To")
    for con in model.constraints:
        pieces = _fmt_terms(con.terms) + [con.sense, _fmt_coef(con.rhs)]
        lines += _wrap(f" {con.name}:", pieces)
    lines.append("Bounds")
    for v, kind in model.variables.items():
        if kind == CONTINUOUS:
            lines.append(f" 0 <= {v} <= 1")
    lines.append("Binaries")
    binaries = [v for v, kind in model.variables.items() if kind == BINARY]
    lines += [" " + line.strip() for line in _wrap("", binaries)] if binaries else []
    lines.append("End")
    return "\n".join(lines) + "\n"


# --- solutions ------------------------------------------------------------------

class ImportedSolution(NamedTuple):
    structure: CommunityStructure
    violations: list
    values: dict


def parse_solution_text(sol_text):
    """``name value`` lines into a dict; ``#`` comments and blanks skipped."""
    values = {}
    for lineno, raw in enumerate(sol_text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MilpDomainError(f"line {lineno}: expected 'name value', got {line!r}")
        try:
            values[parts[0]] = float(parts[1])
        except ValueError:
            raise MilpDomainError(f"line {lineno}: bad value {parts[1]!r}") from None
    return values


def import_solution(model, sol_text):
    """Decode a solver solution into communities (``x >= 0.5`` means member).

    Unknown variable names raise a :class:`SolutionParseWarning`; a missing
    ``x`` variable is an error. Violations are reported, not rejected.
    """
    values = parse_solution_text(sol_text)
    unknown = sorted(v for v in values if v not in model.variables)
    for name in unknown:
        warnings.warn(f"unknown variable {name!r} in solution", SolutionParseWarning,
                      stacklevel=2)
    comms = []
    for k in range(model.n_c):
        members = set()
        for i in range(model.n):
            name = x_name(i, k)
            if name not in values:
                raise MilpDomainError(f"solution lacks a value for {name}")
            if values[name] >= 0.5:
                members.add(i)
        if members:
            comms.append(members)
    pi = CommunityStructure(comms, model.n, model.n_c,
                            model.p if model.p is not None else model.n_c)
    violations = validate_structure(model.weights, pi) if model.weights is not None else []
    return ImportedSolution(pi, violations, values)


def assignment_from_structure(model, pi):
    """Variable values implied by ``pi`` (communities in their stored order)."""
    values = {v: 0.0 for v in model.variables}
    comms = list(pi.communities)
    if len(comms) > model.n_c:
        raise MilpDomainError("structure has more communities than the model")
    for k, s in enumerate(comms):
        for i in s:
            values[x_name(i, k)] = 1.0
        for i, j in combinations(sorted(s), 2):
            values[z_name(i, j, k)] = 1.0
    for name in model.variables:
        if name.startswith("h_"):
            _, i, k, r = name.split("_")
            i, k, r = int(i), int(k) - 1, int(r) - 1
            values[name] = values[x_name(i, r)] * (1.0 - values[x_name(i, k)])
        elif name.startswith("y_"):
            _, i, j = name.split("_")
            i, j = int(i), int(j)
            values[name] = float(any(values[z_name(i, j, k)] for k in range(model.n_c)))
    return values


def format_solution(values):
    return "".join(f"{v} {repr(float(x))}\n" for v, x in values.items())


# --- brute force ----------------------------------------------------------------

def _masks_bits(n):
    return (np.arange(1 << n, dtype=np.int64)[:, None] >> np.arange(n)) & 1


def _subset_sums(row, n):
    """``out[mask] = sum of row[j] for j in mask`` for every mask < 2**n."""
    out = np.zeros(1, dtype=np.float64)
    for j in range(n):
        out = np.concatenate([out, out + row[j]])
    return out


def _stable_masks(W, tol):
    n = W.shape[0]
    size = 1 << n
    ok = np.ones(size, dtype=bool)
    masks = np.arange(size, dtype=np.int64)
    for i in range(n):
        inside = _subset_sums(W[i], n)
        half = 0.5 * (W[i].sum() - W[i, i])
        member = (masks >> i) & 1 == 1
        ok &= ~member | (inside >= half - tol)
    ok[0] = False
    return np.flatnonzero(ok)


def _coalition_values(W):
    n = W.shape[0]
    v = np.zeros(1, dtype=np.float64)
    for b in range(n):
        lower = _subset_sums(W[b, :b], b) if b else np.zeros(1)
        v = np.concatenate([v, v + lower])
    return v


def _pair_once_value(values, chosen):
    total = 0.0
    for r in range(1, len(chosen) + 1):
        sign = 1.0 if r % 2 else -1.0
        for combo in combinations(chosen, r):
            inter = combo[0]
            for m in combo[1:]:
                inter &= m
            if inter:
                total += sign * values[inter]
    return total


def brute_force_optimum(w, n_c, p, objective="pair_once", tol=STABILITY_TOL):
    """Exact optimum over feasible structures by enumeration (``n * n_c <= 20``).

    Feasible means: every node covered, at most ``p`` memberships per node,
    no community contained in another, every community stable. ``objective``
    is ``"pair_once"`` (each co-member pair counted once) or
    ``"shapley_sum"`` (each pair counted once per shared community). Ties
    go to the structure with the smallest canonical key.
    """
    _check_sizes(n_c, p)
    if objective not in ("pair_once", "shapley_sum"):
        raise ValueError(f"unknown objective {objective!r}")
    W = as_array(w)
    n = W.shape[0]
    if n * n_c > BRUTE_FORCE_LIMIT:
        raise BruteForceLimitError(
            f"brute force refused: n*n_c = {n * n_c} exceeds {BRUTE_FORCE_LIMIT}")
    full = (1 << n) - 1
    cands = _stable_masks(W, tol).tolist()
    values = _coalition_values(W)
    member_of = [[(m >> i) & 1 for i in range(n)] for m in cands]

    best = None
    counts = [0] * n

    def consider(chosen):
        nonlocal best
        if objective == "pair_once":
            val = _pair_once_value(values, chosen)
        else:
            val = float(sum(values[m] for m in chosen))
        comms = [[i for i in range(n) if (m >> i) & 1] for m in chosen]
        key = tuple(tuple(sorted(s)) for s in canonical_order(comms))
        if best is None or val > best[0] + 1e-9 or (abs(val - best[0]) <= 1e-9 and key < best[1]):
            best = (val, key)

    def dfs(start, chosen, union):
        if chosen and union == full:
            consider(chosen)
        if len(chosen) == n_c:
            return
        for idx in range(start, len(cands)):
            m = cands[idx]
            if any((m & c) == m or (m & c) == c for c in chosen):
                continue
            bits = member_of[idx]
            if any(counts[i] + bits[i] > p for i in range(n)):
                continue
            for i in range(n):
                counts[i] += bits[i]
            chosen.append(m)
            dfs(idx + 1, chosen, union | m)
            chosen.pop()
            for i in range(n):
                counts[i] -= bits[i]

    dfs(0, [], 0)
    if best is None:
        raise NoFeasibleStructureError("no feasible community structure exists")
    pi = CommunityStructure([set(s) for s in best[1]], n, n_c, p)
    return pi, best[0]
