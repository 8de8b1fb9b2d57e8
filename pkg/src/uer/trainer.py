"""Single-pass training loop over a class-incremental stream.

Each step follows the same order: register any labels not seen before,
retrieve a replay batch from the buffer, score the incoming batch with the
learn rule and the replayed batch with the replay rule, take one SGD step
on the summed loss, and only then offer the incoming batch to the buffer.

A method is a triple of scoring rules: how incoming samples are learned
(dot or cosine), how replayed samples are learned (dot, cosine, or the
alpha-mix of both cross-entropies), and how test samples are scored. The
stock methods:

    uer       cosine learn, mixed replay (alpha, default 0.5), dot test
    uer-a     uer with alpha pinned to 1 (pure dot replay)
    er        dot everywhere, one combined mean over incoming + replayed
    lucir     cosine everywhere
    finetune  dot learn, replay disabled

Losses are per-batch means; the reported total is loss_current +
loss_replay. The er preset instead averages over the union of the two
batches in a single term, and its reported pair is the per-batch partial
sums of that one mean so the total still adds up exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evaluation import StageMetrics, accuracy, average_accuracy, average_posterior, \
    bias_diagnostics
from .logits import CosineScale, LogitMode, PredictorParams, loss_current, loss_dot, \
    loss_replay
from .memory import MemoryBuffer, StoredSample, buffer_retrieve, buffer_update
from .net import FeatureExtractor, GradientTape, backward_batch, forward_batch, \
    init_extractor, sgd_step
from .numeric import Rng, make_rng
from .stream import Dataset, LabeledData, Stage, StreamConfig, build_stages, iterate_batches


@dataclass(frozen=True)
class ReplayRule:
    kind: str  # "dot" | "cosine" | "mixed"
    alpha: float = 1.0  # only meaningful for "mixed"

    def __post_init__(self):
        if self.kind not in ("dot", "cosine", "mixed"):
            raise ValueError(f"unknown replay rule {self.kind!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha out of [0,1]: {self.alpha}")

    def effective_alpha(self) -> float:
        """Weight on the dot cross-entropy; cosine is the complement."""
        if self.kind == "dot":
            return 1.0
        if self.kind == "cosine":
            return 0.0
        return self.alpha


@dataclass(frozen=True)
class LogitTriple:
    learn: LogitMode
    replay: ReplayRule
    test: LogitMode


@dataclass(frozen=True)
class MethodConfig:
    name: str
    triple: LogitTriple
    replay_enabled: bool = True
    alpha: float = 0.5
    gamma: float = 10.0
    lr: float = 0.1
    buffer_capacity: int = 500
    joint_batch: bool = False
    hidden_dims: tuple[int, ...] = (64,)
    seeds: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha out of [0,1]: {self.alpha}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.lr > 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.buffer_capacity < 0:
            raise ValueError(f"buffer capacity must be non-negative, got {self.buffer_capacity}")
        if not self.hidden_dims or any(d < 1 for d in self.hidden_dims):
            raise ValueError(f"hidden dims must be positive, got {self.hidden_dims}")
        if self.joint_batch:
            if self.triple.replay.kind != self.triple.learn.value:
                raise ValueError("joint_batch needs matching learn and replay rules")

    def scale(self) -> CosineScale:
        return CosineScale(self.gamma)


def uer_method(alpha: float = 0.5, **kw) -> MethodConfig:
    return MethodConfig(name=kw.pop("name", "uer"),
                        triple=LogitTriple(LogitMode.COSINE, ReplayRule("mixed", alpha),
                                           LogitMode.DOT),
                        alpha=alpha, **kw)


def uer_a_method(**kw) -> MethodConfig:
    if kw.pop("alpha", 1.0) != 1.0:
        raise ValueError("uer-a pins alpha = 1")
    return MethodConfig(name=kw.pop("name", "uer-a"),
                        triple=LogitTriple(LogitMode.COSINE, ReplayRule("mixed", 1.0),
                                           LogitMode.DOT),
                        alpha=1.0, **kw)


def er_method(**kw) -> MethodConfig:
    return MethodConfig(name=kw.pop("name", "er"),
                        triple=LogitTriple(LogitMode.DOT, ReplayRule("dot"), LogitMode.DOT),
                        joint_batch=kw.pop("joint_batch", True), **kw)


def lucir_method(**kw) -> MethodConfig:
    return MethodConfig(name=kw.pop("name", "lucir"),
                        triple=LogitTriple(LogitMode.COSINE, ReplayRule("cosine"),
                                           LogitMode.COSINE), **kw)


def finetune_method(**kw) -> MethodConfig:
    if kw.pop("replay_enabled", False):
        raise ValueError("finetune pins replay_enabled = false")
    return MethodConfig(name=kw.pop("name", "finetune"),
                        triple=LogitTriple(LogitMode.DOT, ReplayRule("dot"), LogitMode.DOT),
                        replay_enabled=False,
                        buffer_capacity=kw.pop("buffer_capacity", 0), **kw)


def triple_method(name: str, learn: str, replay: str, test: str,
                  alpha: float = 0.5, **kw) -> MethodConfig:
    """A bare scoring triple; replay "mixed" takes the alpha weight."""
    rule = ReplayRule(replay, alpha if replay == "mixed" else
                      (1.0 if replay == "dot" else 0.0))
    return MethodConfig(name=name,
                        triple=LogitTriple(LogitMode(learn), rule, LogitMode(test)),
                        alpha=alpha, **kw)


PRESET_BUILDERS = {
    "uer": uer_method,
    "uer-a": uer_a_method,
    "er": er_method,
    "lucir": lucir_method,
    "finetune": finetune_method,
}

# the eight learn/replay/test combinations, dot and cosine only
TABLE1_GRID = [
    ("dot", "dot", "dot"),
    ("dot", "dot", "cosine"),
    ("cosine", "cosine", "cosine"),
    ("cosine", "cosine", "dot"),
    ("dot", "cosine", "dot"),
    ("dot", "cosine", "cosine"),
    ("cosine", "dot", "cosine"),
    ("cosine", "dot", "dot"),
]


@dataclass
class StepRecord:
    loss_current: float
    loss_replay: float
    loss_total: float


@dataclass
class TrainState:
    extractor: FeatureExtractor
    predictor: PredictorParams
    buffer: MemoryBuffer
    tape: GradientTape
    class_order: list[int] = field(default_factory=list)
    label_to_row: dict[int, int] = field(default_factory=dict)
    stage_baseline: PredictorParams | None = None
    step: int = 0
    stream_position: int = 0
    consumed_in_stage: int = 0


@dataclass
class ExperimentResult:
    method: str
    seed: int
    metrics: list[StageMetrics]
    steps: list[StepRecord]


def init_state(method: MethodConfig, input_dim: int, rng: Rng) -> TrainState:
    extractor = init_extractor((input_dim, *method.hidden_dims), rng)
    predictor = PredictorParams.empty(extractor.out_dim)
    return TrainState(
        extractor=extractor,
        predictor=predictor,
        buffer=MemoryBuffer(method.buffer_capacity if method.replay_enabled else 0),
        tape=GradientTape(extractor, predictor),
        stage_baseline=predictor.copy(),
    )


def register_classes(state: TrainState, labels, rng: Rng) -> list[int]:
    """Append a fresh scorer row for every label not seen before.

    Rows use the same uniform init as a single-output net layer over the
    feature dim; biases start at zero. The stage baseline is extended with
    the same initial values so parameter movement excludes initialization.
    """
    added = []
    d = state.predictor.dim
    s = np.sqrt(6.0 / (d + 1))
    for label in np.asarray(labels).ravel():
        label = int(label)
        if label in state.label_to_row:
            continue
        row = rng.uniform(-s, s, size=d)
        idx = state.predictor.add_class(row, 0.0)
        state.label_to_row[label] = idx
        state.class_order.append(label)
        state.tape.add_class_rows(1)
        if state.stage_baseline is not None:
            state.stage_baseline.add_class(row.copy(), 0.0)
        added.append(label)
    return added


def _rows_for(state: TrainState, labels: np.ndarray) -> np.ndarray:
    return np.array([state.label_to_row[int(y)] for y in labels], dtype=np.int64)


def _batch_loss(mode: LogitMode, state: TrainState, scale: CosineScale,
                H: np.ndarray, rows: np.ndarray, weight: float = 1.0):
    if mode is LogitMode.DOT:
        return loss_dot(state.predictor, H, rows, state.tape, grad_weight=weight)
    return loss_current(state.predictor, scale, H, rows, state.tape, grad_weight=weight)


def train_step(state: TrainState, x_batch: np.ndarray, y_batch: np.ndarray,
               method: MethodConfig, memory_batch_size: int, rng: Rng) -> StepRecord:
    register_classes(state, y_batch, rng)
    scale = method.scale()
    rows_cur = _rows_for(state, y_batch)

    replayed: list[StoredSample] = []
    if method.replay_enabled:
        replayed = buffer_retrieve(state.buffer, memory_batch_size, rng)

    if method.joint_batch:
        # one mean over incoming + replayed, scored with the learn rule;
        # report the per-batch partial sums so the pair still adds up
        n_cur = len(y_batch)
        if replayed:
            X = np.concatenate([x_batch, np.stack([s.x for s in replayed])])
            rows = np.concatenate([rows_cur,
                                   _rows_for(state, np.array([s.y for s in replayed]))])
        else:
            X, rows = x_batch, rows_cur
        H, cache = forward_batch(state.extractor, X)
        if method.triple.learn is LogitMode.DOT:
            _, dH = loss_dot(state.predictor, H, rows, state.tape)
        else:
            _, dH = loss_current(state.predictor, scale, H, rows, state.tape)
        backward_batch(state.extractor, cache, dH, state.tape)
        l_c, l_p = _joint_partials(state, method, scale, H, rows, n_cur)
    else:
        H_cur, cache_cur = forward_batch(state.extractor, x_batch)
        l_c, dH_cur = _batch_loss(method.triple.learn, state, scale, H_cur, rows_cur)
        backward_batch(state.extractor, cache_cur, dH_cur, state.tape)
        l_p = 0.0
        if replayed:
            X_mem = np.stack([s.x for s in replayed])
            rows_mem = _rows_for(state, np.array([s.y for s in replayed]))
            H_mem, cache_mem = forward_batch(state.extractor, X_mem)
            l_p, dH_mem = loss_replay(state.predictor, scale,
                                      method.triple.replay.effective_alpha(),
                                      H_mem, rows_mem, state.tape)
            backward_batch(state.extractor, cache_mem, dH_mem, state.tape)

    l_total = l_c + l_p
    sgd_step(state.extractor, state.predictor, state.tape, method.lr)

    if method.replay_enabled:
        offered = [StoredSample(x_batch[i].copy(), int(y_batch[i]), state.stream_position + i)
                   for i in range(len(y_batch))]
        buffer_update(state.buffer, offered, rng)

    state.stream_position += len(y_batch)
    state.consumed_in_stage += len(y_batch)
    state.step += 1
    return StepRecord(l_c, l_p, l_total)


def _joint_partials(state, method, scale, H, rows, n_cur):
    from .logits import _ce_rows, cosine_logits_batch, dot_logits_batch  # local reuse

    if method.triple.learn is LogitMode.DOT:
        L = dot_logits_batch(state.predictor, H)
    else:
        L = cosine_logits_batch(state.predictor, H, scale)
    ce = _ce_rows(L, rows)
    total = len(rows)
    l_c = float(ce[:n_cur].sum() / total)
    l_p = float(ce[n_cur:].sum() / total)
    return l_c, l_p


def _pooled(parts: list[LabeledData]) -> LabeledData:
    return LabeledData(np.concatenate([p.x for p in parts]),
                       np.concatenate([p.y for p in parts]))


def _collect_stage_metrics(state: TrainState, stages: list[Stage], t: int,
                           method: MethodConfig) -> StageMetrics:
    scale = method.scale()
    mode = method.triple.test
    row = [accuracy(state, stages[j].test, mode, scale) for j in range(t)]
    prev_sets = [stages[j].test for j in range(t - 1)]
    acc_prev = accuracy(state, _pooled(prev_sets), mode, scale) if prev_sets else None
    prev_rows = [state.label_to_row[c] for j in range(t - 1) for c in stages[j].class_set
                 if c in state.label_to_row]
    curr_rows = [state.label_to_row[c] for c in stages[t - 1].class_set
                 if c in state.label_to_row]
    diag = bias_diagnostics(state.predictor, prev_rows, curr_rows, state.stage_baseline)
    posterior = average_posterior(state, _pooled([stages[j].test for j in range(t)]),
                                  mode, scale)
    return StageMetrics(
        stage=t,
        class_order=list(state.class_order),
        current_classes=[int(c) for c in stages[t - 1].class_set],
        accuracy_row=row,
        average_accuracy=average_accuracy(row),
        acc_previous=acc_prev,
        acc_current=row[-1],
        norm_prev=diag.norm_prev,
        norm_curr=diag.norm_curr,
        mean_w_prev=diag.mean_w_prev,
        std_w_prev=diag.std_w_prev,
        mean_w_curr=diag.mean_w_curr,
        std_w_curr=diag.std_w_curr,
        mean_b_prev=diag.mean_b_prev,
        mean_b_curr=diag.mean_b_curr,
        accumulated_param_change=diag.accumulated_param_change,
        avg_posterior=[float(v) for v in posterior],
        consumed_samples=state.consumed_in_stage,
    )


def run_experiment(dataset: Dataset, method: MethodConfig, stream_cfg: StreamConfig,
                   seed: int) -> ExperimentResult:
    """One full pass over the stream: train each stage once, then score it.

    The seed fully determines initialization, stage partition, batch order,
    retrieval, and buffer replacement, so identical calls produce identical
    results bit for bit.
    """
    rng = make_rng([int(seed), 1])
    stages = build_stages(dataset, stream_cfg, rng)
    state = init_state(method, dataset.input_dim, rng)
    metrics: list[StageMetrics] = []
    steps: list[StepRecord] = []
    for t, stage in enumerate(stages, 1):
        state.stage_baseline = state.predictor.copy()
        state.consumed_in_stage = 0
        for x_b, y_b in iterate_batches(stage, stream_cfg, rng):
            steps.append(train_step(state, x_b, y_b, method,
                                    stream_cfg.batch_size_memory, rng))
        metrics.append(_collect_stage_metrics(state, stages, t, method))
    return ExperimentResult(method=method.name, seed=int(seed), metrics=metrics, steps=steps)
