"""Cost-aware logical rewrites around Predict operators.

Model inference dominates query cost, so every rule here tries to
shrink or reorder Predict inputs: classical filters slide below
predicts and joins, semantic selects float above joins when that cuts
the rows reaching the model, adjacent predicates on one model merge
into a single request, and stacked semantic selects run cheapest
first. All rules preserve result multisets; they only move work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..errors import ExecutionError
from ..expressions import (Arithmetic, ColumnRef, Comparison, Expr, IsNull,
                           Literal, Logical, Negate, Not, conjoin,
                           referenced_indexes, remap_columns, split_conjuncts)
from ..sql.prompt import PromptTemplate, Segment
from .logical import (Aggregate, Filter, Get, Join, Limit, Order, PlanNode,
                      Predict, Project, SCALAR, TABLE_GENERATION,
                      TABLE_INFERENCE, explain_text, walk)

RULE_ORDER = (
    "guard_pushdown",
    "pull_up_predict",
    "order_select_vs_join",
    "merge_semantic_predicates",
    "order_semantic_predicates",
)

_MAX_ROUNDS = 10


@dataclass
class CostAnnotation:
    """Per-predict cost facts the rewrite rules consult."""

    rows: float = 0.0
    distinct: float | None = None
    call_latency: float = 1.0
    selectivity: float = 0.5
    quality: float = 1.0
    avg_input_bytes: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.selectivity <= 1.0:
            raise ExecutionError("selectivity must be within [0, 1]")
        if not 0.0 < self.quality <= 1.0:
            raise ExecutionError("quality must be within (0, 1]")
        if self.rows < 0:
            raise ExecutionError("row estimate must be non-negative")


@dataclass
class TraceEntry:
    rule: str
    before: str
    after: str
    applied: bool = True
    note: str = ""


@dataclass
class RewriteTrace:
    entries: list[TraceEntry] = field(default_factory=list)

    def applied(self) -> list[TraceEntry]:
        return [e for e in self.entries if e.applied]

    def declined(self) -> list[TraceEntry]:
        return [e for e in self.entries if not e.applied]

    def summary(self) -> list[str]:
        out = []
        for e in self.entries:
            if e.applied:
                out.append(f"{e.rule}: applied")
            else:
                out.append(f"{e.rule}: declined ({e.note})")
        return out


def _rebuild(node: PlanNode, children: list[PlanNode]) -> PlanNode:
    if isinstance(node, Get):
        return node
    if isinstance(node, Filter):
        return Filter(children[0], node.predicate)
    if isinstance(node, Project):
        return Project(children[0], node.exprs,
                       [c.name for c in node.schema],
                       [c.origin for c in node.schema])
    if isinstance(node, Join):
        return Join(children[0], children[1], node.kind, node.condition)
    if isinstance(node, Aggregate):
        n = len(node.group_exprs)
        return Aggregate(children[0], node.group_exprs,
                         [c.name for c in node.schema[:n]], node.aggs)
    if isinstance(node, Order):
        return Order(children[0], node.keys)
    if isinstance(node, Limit):
        return Limit(children[0], node.limit)
    if isinstance(node, Predict):
        return Predict(children[0] if children else None, node.info)
    raise ExecutionError(f"cannot rebuild {type(node).__name__}")


def _resolve_source(node: PlanNode, index: int):
    """Trace a column back to its base table, or None if computed."""
    if isinstance(node, Get):
        return node.table, node.schema[index].name
    if isinstance(node, (Filter, Order, Limit)):
        return _resolve_source(node.child, index)
    if isinstance(node, Predict):
        if node.children and index < len(node.child.schema):
            return _resolve_source(node.child, index)
        return None
    if isinstance(node, Project):
        expr = node.exprs[index]
        if isinstance(expr, ColumnRef):
            return _resolve_source(node.child, expr.index)
        return None
    if isinstance(node, Join):
        split = len(node.left.schema)
        if index < split:
            return _resolve_source(node.left, index)
        return _resolve_source(node.right, index - split)
    return None


def _base_table(node: PlanNode):
    """The single base table feeding a linear subtree, or None."""
    while True:
        if isinstance(node, Get):
            return node.table
        if isinstance(node, (Filter, Order, Limit, Project)):
            node = node.child
        elif isinstance(node, Predict) and node.children:
            node = node.child
        else:
            return None


def _contains_filter(node: PlanNode) -> bool:
    return any(isinstance(n, Filter) for n in walk(node))


@dataclass
class _Unit:
    """A guarded semantic select: Filter directly above Predict,
    optionally under a projection that drops the predicted column."""

    proj: Project | None
    filt: Filter
    pred: Predict
    out_start: int = 0


def _unit_parts(node: PlanNode) -> _Unit | None:
    proj = None
    if isinstance(node, Project):
        proj = node
        node = node.child
    if (isinstance(node, Filter) and isinstance(node.child, Predict)
            and node.child.children):
        return _Unit(proj, node, node.child)
    return None


class _Decline(Exception):
    def __init__(self, note: str):
        super().__init__(note)
        self.note = note


class Optimizer:
    """Applies the rewrite rules to a fixpoint, recording a trace."""

    def __init__(self, models, session: dict | None = None):
        self.models = models
        self.session = dict(session or {})
        self.enabled = self._enabled_rules()
        try:
            self.threshold = float(
                self.session.get("merge_selectivity_threshold", 0.5))
        except (TypeError, ValueError):
            raise ExecutionError(
                "merge_selectivity_threshold must be numeric") from None
        self._passes = {
            "guard_pushdown": self._pass_guard,
            "pull_up_predict": self._pass_pull_up,
            "order_select_vs_join": self._pass_select_vs_join,
            "merge_semantic_predicates": self._pass_merge,
            "order_semantic_predicates": self._pass_order_semantic,
        }
        self._declines: list[str] = []

    def _enabled_rules(self) -> tuple[str, ...]:
        raw = self.session.get("optimizer_rules")
        if raw is None:
            return RULE_ORDER
        names = [n.strip() for n in str(raw).split(",") if n.strip()]
        for name in names:
            if name not in RULE_ORDER:
                raise ExecutionError(f"unknown optimizer rule: {name}")
        return tuple(n for n in RULE_ORDER if n in names)

    # --- driver ---

    def optimize(self, plan: PlanNode) -> tuple[PlanNode, RewriteTrace]:
        trace = RewriteTrace()
        seen_declines: set[tuple[str, str]] = set()
        for _ in range(_MAX_ROUNDS):
            changed = False
            for rule in RULE_ORDER:
                if rule not in self.enabled:
                    continue
                before = explain_text(plan)
                self._declines = []
                new_plan = self._passes[rule](plan)
                after = explain_text(new_plan)
                if after != before:
                    trace.entries.append(TraceEntry(rule, before, after))
                    plan = new_plan
                    changed = True
                for note in self._declines:
                    key = (rule, note)
                    if key not in seen_declines:
                        seen_declines.add(key)
                        trace.entries.append(
                            TraceEntry(rule, before, before, False, note))
            if not changed:
                break
        return plan, trace

    def replay(self, plan: PlanNode, trace: RewriteTrace) -> PlanNode:
        """Re-run the applied trace entries; passes are deterministic,
        so this reproduces the optimized plan from the original."""
        for entry in trace.applied():
            plan = self._passes[entry.rule](plan)
        return plan

    # --- model hints ---

    def _hint(self, model: str, key: str, default: float) -> float:
        try:
            entry = self.models.get(model)
        except Exception:
            return default
        raw = entry.options.get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except (TypeError, ValueError):
            raise ExecutionError(
                f"model {model}: hint {key!r} must be numeric") from None

    def annotation_for(self, pred: Predict, base: PlanNode) -> CostAnnotation:
        info = pred.info
        bytes_total = 0.0
        for i in info.input_indexes:
            source = _resolve_source(base, i)
            if source is not None:
                table, col = source
                bytes_total += table.avg_byte_len.get(col, 0.0)
        return CostAnnotation(
            rows=base.est_rows or 0.0,
            selectivity=self._hint(info.model, "selectivity", 0.5),
            quality=self._hint(info.model, "quality", 1.0),
            avg_input_bytes=bytes_total,
        )

    # --- rule: guard_pushdown ---

    def _pass_guard(self, node: PlanNode) -> PlanNode:
        node = _rebuild(node, [self._pass_guard(c) for c in node.children])
        if isinstance(node, Filter):
            return self._push_filter(node.predicate, node.child)
        return node

    def _push_filter(self, predicate: Expr, child: PlanNode) -> PlanNode:
        conjuncts = split_conjuncts(predicate)

        if isinstance(child, Filter):
            # merge adjacent filters, inner conjuncts first
            merged = split_conjuncts(child.predicate) + conjuncts
            return self._push_filter(conjoin(merged), child.child)

        if isinstance(child, Project):
            inlined = [self._inline(c, child.exprs) for c in conjuncts]
            pushed = self._push_filter(conjoin(inlined), child.child)
            return _rebuild(child, [pushed])

        if isinstance(child, Predict) and child.children:
            # cheap filters on predict inputs go below the model call;
            # filters reading predicted columns must stay above
            base_len = len(child.child.schema)
            below, above = [], []
            for c in conjuncts:
                refs = referenced_indexes(c)
                (below if all(i < base_len for i in refs) else above).append(c)
            if below:
                pushed = self._push_filter(conjoin(below), child.child)
                new_child = Predict(pushed, child.info)
                if above:
                    return Filter(new_child, conjoin(above))
                return new_child
            return Filter(child, predicate)

        if isinstance(child, Join):
            split = len(child.left.schema)
            total = len(child.schema)
            left_c, right_c, rest = [], [], []
            for c in conjuncts:
                refs = referenced_indexes(c)
                if all(i < split for i in refs):
                    left_c.append(c)
                elif all(split <= i < total for i in refs):
                    right_c.append(remap_columns(
                        c, {i: i - split for i in range(split, total)}))
                else:
                    rest.append(c)
            if left_c or right_c:
                left = (self._push_filter(conjoin(left_c), child.left)
                        if left_c else child.left)
                right = (self._push_filter(conjoin(right_c), child.right)
                         if right_c else child.right)
                new_join = Join(left, right, child.kind, child.condition)
                if rest:
                    return Filter(new_join, conjoin(rest))
                return new_join
            return Filter(child, predicate)

        return Filter(child, predicate)

    def _inline(self, expr: Expr, exprs: list[Expr]) -> Expr:
        """Substitute projection expressions for column references so a
        filter can slide below the Project."""
        if isinstance(expr, ColumnRef):
            return exprs[expr.index]
        if isinstance(expr, Literal):
            return expr
        if isinstance(expr, Comparison):
            return Comparison(expr.op, self._inline(expr.left, exprs),
                              self._inline(expr.right, exprs))
        if isinstance(expr, Logical):
            return Logical(expr.op, [self._inline(i, exprs) for i in expr.items])
        if isinstance(expr, Not):
            return Not(self._inline(expr.operand, exprs))
        if isinstance(expr, IsNull):
            return IsNull(self._inline(expr.operand, exprs), expr.negated)
        if isinstance(expr, Arithmetic):
            return Arithmetic(expr.op, self._inline(expr.left, exprs),
                              self._inline(expr.right, exprs))
        if isinstance(expr, Negate):
            return Negate(self._inline(expr.operand, exprs))
        raise ExecutionError(f"cannot inline {type(expr).__name__}")

    # --- rule: pull_up_predict ---

    def _pass_pull_up(self, node: PlanNode) -> PlanNode:
        node = _rebuild(node, [self._pass_pull_up(c) for c in node.children])
        if isinstance(node, Join):
            for side in ("left", "right"):
                unit = _unit_parts(getattr(node, side))
                if unit is None:
                    continue
                other = node.right if side == "left" else node.left
                if not _contains_filter(other):
                    self._declines.append(
                        f"pull-up of {unit.pred.info.model}: the join does "
                        "not filter the other side; select stays below")
                    continue
                try:
                    return self._hoist_above_join(node, side, unit)
                except _Decline as d:
                    self._declines.append(d.note)
        return node

    def _hoist_above_join(self, join: Join, side: str, unit: _Unit) -> PlanNode:
        proj, filt, pred = unit.proj, unit.filt, unit.pred
        X = pred.child
        x = len(X.schema)
        o = len(pred.info.outputs)
        other = join.right if side == "left" else join.left
        before_schema = list(join.schema)
        model = pred.info.model

        if proj is not None:
            for expr in proj.exprs:
                if any(i >= x for i in referenced_indexes(expr)):
                    raise _Decline(
                        f"pull-up of {model}: the projection reads a "
                        "predicted column")
            inv: dict[int, int] = {}
            for j, expr in enumerate(proj.exprs):
                if isinstance(expr, ColumnRef) and expr.index not in inv:
                    inv[expr.index] = j
            new_side = Project(X, proj.exprs,
                               [c.name for c in proj.schema],
                               [c.origin for c in proj.schema])
            p = len(proj.schema)
        else:
            inv = {i: i for i in range(x)}
            new_side = X
            p = x

        r = len(other.schema)
        condition = self._condition_under_hoist(join, side, x, o,
                                                bare=proj is None)
        if side == "left":
            inner = Join(new_side, other, join.kind, condition)
            offset = 0
        else:
            inner = Join(other, new_side, join.kind, condition)
            offset = r  # hoisted side columns sit after the other side

        try:
            new_inputs = tuple(offset + inv[i] for i in pred.info.input_indexes)
        except KeyError:
            raise _Decline(f"pull-up of {model}: a projection removes a "
                           "predict input column") from None
        new_pred = Predict(inner, replace(pred.info, input_indexes=new_inputs))

        out_base = len(inner.schema)
        mapping: dict[int, int] = {}
        for i in referenced_indexes(filt.predicate):
            if i >= x:
                mapping[i] = out_base + (i - x)
            elif i in inv:
                mapping[i] = offset + inv[i]
            else:
                raise _Decline(f"pull-up of {model}: a projection removes a "
                               "column the select reads")
        new_filter = Filter(new_pred, remap_columns(filt.predicate, mapping))

        # restore the original column layout for everything above the join
        if side == "right" and proj is None:
            return new_filter  # layout already matches
        if side == "left":
            if proj is None:
                order = (list(range(x)) + [x + r + j for j in range(o)]
                         + [x + k for k in range(r)])
            else:
                order = list(range(p + r))
        else:
            order = list(range(r + p))
        exprs = [ColumnRef(k, new_filter.schema[k].type,
                           new_filter.schema[k].name) for k in order]
        return Project(new_filter, exprs,
                       [c.name for c in before_schema],
                       [c.origin for c in before_schema])

    def _condition_under_hoist(self, join: Join, side: str, x: int, o: int,
                               bare: bool) -> Expr | None:
        """Join condition rewritten for the predicted column leaving the
        side schema. With a projection the side schema is unchanged."""
        condition = join.condition
        if condition is None or not bare:
            return condition
        refs = referenced_indexes(condition)
        if side == "left":
            # [X, b, R] becomes [X, R]
            if any(x <= i < x + o for i in refs):
                raise _Decline("pull-up: the join condition reads a "
                               "predicted column")
            return remap_columns(condition,
                                 {i: (i if i < x else i - o) for i in refs})
        split = len(join.left.schema)
        if any(i >= split + x for i in refs):
            raise _Decline("pull-up: the join condition reads a "
                           "predicted column")
        return condition

    # --- rule: order_select_vs_join ---

    def _pass_select_vs_join(self, node: PlanNode) -> PlanNode:
        node = _rebuild(node,
                        [self._pass_select_vs_join(c) for c in node.children])
        demoted = self._try_demote(node)
        if demoted is not None:
            return demoted
        if isinstance(node, Join) and node.kind == "inner" \
                and node.condition is not None:
            for side in ("left", "right"):
                unit = _unit_parts(getattr(node, side))
                if unit is None:
                    continue
                role = self._side_role(node, side)
                if role == "fk":
                    continue  # select-below is already the cheap plan
                try:
                    return self._hoist_above_join(node, side, unit)
                except _Decline as d:
                    self._declines.append(d.note)
        return node

    def _side_role(self, join: Join, side: str) -> str:
        """'fk', 'pk', or 'unknown' for the named join side."""
        split = len(join.left.schema)
        side_cols: list[str] = []
        for conj in split_conjuncts(join.condition):
            if not (isinstance(conj, Comparison) and conj.op == "="
                    and isinstance(conj.left, ColumnRef)
                    and isinstance(conj.right, ColumnRef)):
                continue
            for ref in (conj.left, conj.right):
                on_left = ref.index < split
                if (side == "left") == on_left:
                    idx = ref.index if on_left else ref.index - split
                    source = _resolve_source(getattr(join, side), idx)
                    if source is not None:
                        side_cols.append(source[1].lower())
        if not side_cols:
            return "unknown"
        table = _base_table(getattr(join, side))
        other = _base_table(join.right if side == "left" else join.left)
        if table is None:
            return "unknown"
        cols = set(side_cols)
        if other is not None:
            for fk in table.foreign_keys:
                if (set(c.lower() for c in fk.columns) == cols
                        and fk.ref_table.lower() == other.name.lower()):
                    return "fk"
        if table.primary_key and \
                set(c.lower() for c in table.primary_key) == cols:
            return "pk"
        return "unknown"

    def _try_demote(self, node: PlanNode) -> PlanNode | None:
        """Push a semantic select below a join when it guards the
        foreign-key side: selecting first shrinks the join input."""
        if not (isinstance(node, Filter) and isinstance(node.child, Predict)
                and node.child.children
                and isinstance(node.child.child, Join)):
            return None
        pred = node.child
        join = pred.child
        if join.kind != "inner" or join.condition is None:
            return None
        split = len(join.left.schema)
        total = len(join.schema)
        idxs = pred.info.input_indexes
        if not idxs:
            return None
        if all(i < split for i in idxs):
            side = "left"
        elif all(i >= split for i in idxs):
            side = "right"
        else:
            return None
        if self._side_role(join, side) != "fk":
            return None
        other = join.right if side == "left" else join.left
        if _contains_filter(other):
            return None  # a filtered join can beat select-first
        out_refs = referenced_indexes(node.predicate)
        if any(i < total for i in out_refs):
            return None  # predicate mixes in base columns
        o = len(pred.info.outputs)

        if side == "left":
            inputs = idxs
            base = join.left
        else:
            inputs = tuple(i - split for i in idxs)
            base = join.right
        new_pred = Predict(base, replace(pred.info, input_indexes=inputs))
        out_start = len(base.schema)
        new_filter = Filter(new_pred, remap_columns(
            node.predicate, {total + j: out_start + j for j in range(o)}))

        if side == "right":
            # predicted column is already last; layout matches
            return Join(join.left, new_filter, join.kind, join.condition)
        new_join = Join(new_filter, join.right, join.kind,
                        remap_columns(join.condition, {
                            i: (i if i < split else i + o)
                            for i in referenced_indexes(join.condition)}))
        l, r = split, total - split
        order = list(range(l)) + [l + o + k for k in range(r)] \
            + [l + j for j in range(o)]
        return self._restore(new_join, node.schema, order)

    def _restore(self, child: PlanNode, want_schema, order: list[int]) -> Project:
        exprs = [ColumnRef(k, child.schema[k].type, child.schema[k].name)
                 for k in order]
        return Project(child, exprs, [c.name for c in want_schema],
                       [c.origin for c in want_schema])

    # --- rule: merge_semantic_predicates ---

    def _pass_merge(self, node: PlanNode) -> PlanNode:
        node = _rebuild(node, [self._pass_merge(c) for c in node.children])
        merged = self._try_merge(node)
        return merged if merged is not None else node

    def _try_merge(self, node: PlanNode) -> PlanNode | None:
        # adjacent projections: Pb directly above Pa
        if (isinstance(node, Predict) and node.children
                and isinstance(node.child, Predict) and node.child.children):
            hi, lo = node, node.child
            if self._mergeable(hi, lo):
                return Predict(lo.child, self._merge_infos(lo, hi))
            return None
        # guarded selects: Fb(Pb(Fa(Pa(X))))
        if not (isinstance(node, Filter) and isinstance(node.child, Predict)):
            return None
        fb, pb = node, node.child
        if not (pb.children and isinstance(pb.child, Filter)
                and isinstance(pb.child.child, Predict)
                and pb.child.child.children):
            return None
        fa, pa = pb.child, pb.child.child
        if not self._mergeable(pb, pa):
            return None
        sel = self._hint(pa.info.model, "selectivity", 0.5)
        if sel < self.threshold:
            self._declines.append(
                f"merge on {pa.info.model}: selectivity {sel:g} is below "
                f"the merge threshold {self.threshold:g}")
            return None
        merged = Predict(pa.child, self._merge_infos(pa, pb))
        # output positions are unchanged, so both predicates apply as-is
        predicate = conjoin(split_conjuncts(fa.predicate)
                            + split_conjuncts(fb.predicate))
        return Filter(merged, predicate)

    def _mergeable(self, hi: Predict, lo: Predict) -> bool:
        if hi.info.template is None or lo.info.template is None:
            return False
        if hi.info.model != lo.info.model:
            return False  # never merge across models
        if not {hi.info.mode, lo.info.mode} <= {SCALAR, TABLE_INFERENCE}:
            return False
        return set(hi.info.input_indexes) == set(lo.info.input_indexes)

    def _merge_infos(self, lo: Predict, hi: Predict):
        a, b = lo.info, hi.info
        raw = f"Task 1: {a.template.raw}; Task 2: {b.template.raw}"
        segments = ([Segment("text", text="Task 1: ")] + list(a.template.segments)
                    + [Segment("text", text="; Task 2: ")]
                    + list(b.template.segments))
        by_index: dict[int, str] = {}
        for name, idx in zip(a.input_names + b.input_names,
                             a.input_indexes + b.input_indexes):
            by_index.setdefault(idx, name)
        indexes = tuple(by_index)
        names = tuple(by_index[i] for i in indexes)
        template = PromptTemplate(
            raw=raw, segments=segments,
            inputs=list(dict.fromkeys(a.template.inputs + b.template.inputs)),
            outputs=list(a.template.outputs) + list(b.template.outputs))
        outputs = []
        seen: set[str] = set()
        for col in a.outputs + b.outputs:
            name = col.name
            k = 2
            while name.lower() in seen:
                name = f"{col.name}_{k}"
                k += 1
            seen.add(name.lower())
            outputs.append(col.renamed(name))
        return replace(a, template=template, input_indexes=indexes,
                       input_names=names, outputs=tuple(outputs),
                       qualifier=None)

    # --- rule: order_semantic_predicates ---

    def _pass_order_semantic(self, node: PlanNode) -> PlanNode:
        node = _rebuild(node,
                        [self._pass_order_semantic(c) for c in node.children])
        units: list[_Unit] = []
        cur = node
        while (isinstance(cur, Filter) and isinstance(cur.child, Predict)
               and cur.child.children):
            units.append(_Unit(None, cur, cur.child))
            cur = cur.child.child
        if len(units) < 2:
            return node
        base = cur
        x = len(base.schema)

        units.reverse()  # bottom (first executed) first
        offset = x
        for u in units:
            u.out_start = offset
            offset += len(u.pred.info.outputs)
        for u in units:
            if any(i >= x for i in u.pred.info.input_indexes):
                return node  # reads another select's output; keep order
            span = range(u.out_start,
                         u.out_start + len(u.pred.info.outputs))
            refs = referenced_indexes(u.filt.predicate)
            if any(i >= x and i not in span for i in refs):
                return node

        def sort_key(u: _Unit):
            ann = self.annotation_for(u.pred, base)
            return (ann.avg_input_bytes, ann.selectivity, -ann.quality)

        ordered = sorted(units, key=sort_key)
        if ordered == units:
            return node

        plan: PlanNode = base
        offset = x
        for u in ordered:
            pred = Predict(plan, u.pred.info)
            o = len(u.pred.info.outputs)
            mapping = {i: i for i in range(x)}
            mapping.update({u.out_start + j: offset + j for j in range(o)})
            plan = Filter(pred, remap_columns(u.filt.predicate, mapping))
            offset += o
        return plan


# --- cost annotation for EXPLAIN -------------------------------------------

_CLASSICAL_SELECTIVITY = 0.5


def annotate_costs(plan: PlanNode, models, session: dict | None = None) -> PlanNode:
    """Fill est_rows / est_calls bottom-up with coarse heuristics.

    Numbers guide EXPLAIN output only; rule decisions use CostAnnotation.
    """
    from ..predict.config import configure

    session = session or {}

    def annotate(node: PlanNode) -> float:
        for child in node.children:
            annotate(child)
        if isinstance(node, Get):
            node.est_rows = float(node.table.row_count)
        elif isinstance(node, Filter):
            node.est_rows = node.child.est_rows * _CLASSICAL_SELECTIVITY
        elif isinstance(node, (Project, Order)):
            node.est_rows = node.child.est_rows
        elif isinstance(node, Limit):
            node.est_rows = min(node.child.est_rows, float(node.limit))
        elif isinstance(node, Join):
            l, r = node.left.est_rows, node.right.est_rows
            node.est_rows = l * r if node.kind == "cross" else max(l, r)
        elif isinstance(node, Aggregate):
            node.est_rows = max(1.0, node.child.est_rows * 0.1)
            calls = sum(1 for s in node.aggs if s.func == "llm")
            if calls:
                node.est_calls = calls * node.est_rows
        elif isinstance(node, Predict):
            entry = models.get(node.info.model)
            config = configure(entry, session)
            if node.info.mode == TABLE_GENERATION:
                node.est_rows = float(config.max_generated_rows)
                node.est_calls = 1.0
            else:
                rows = node.child.est_rows
                node.est_rows = rows
                if config.use_batching:
                    node.est_calls = float(math.ceil(rows / config.batch_size))
                else:
                    node.est_calls = rows
        return node.est_rows or 0.0

    annotate(plan)
    return plan
