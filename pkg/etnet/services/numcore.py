"""
Dense float64 tensors with define-by-run recording and reverse-mode gradients.

Every operation returns a new ``Tensor``. When gradient recording is enabled
and at least one operand is tracked, the result keeps references to its
operands and a closure mapping the upstream gradient to operand gradients.
``backward`` walks the recorded graph once in reverse topological order and
then frees it.

Recording state is thread-local, so a graph never spans threads.
"""

import itertools
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import (
    Callable,
    Dict,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from scipy.special import expit
from scipy.special import logsumexp as _np_logsumexp

from ..utils.errors import ShapeError

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence[float]]
GradFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_node_ids = itertools.count()
_grad_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Run forward passes without recording a graph"""
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "node_id", "op", "_parents", "_grad_fn")

    def __init__(
        self,
        values: ArrayLike,
        requires_grad: bool = False,
        _parents: Tuple["Tensor", ...] = (),
        _grad_fn: Optional[GradFn] = None,
        op: str = "leaf",
    ):
        if isinstance(values, Tensor):
            values = values.values
        self.values = np.array(values, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.node_id = next(_node_ids)
        self.op = op
        self._parents = _parents
        self._grad_fn = _grad_fn

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def numpy(self) -> np.ndarray:
        return self.values.copy()

    def item(self) -> float:
        return float(self.values.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other: ArrayLike) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        return div(self, other)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


def tensor(values: ArrayLike, requires_grad: bool = False) -> Tensor:
    return values if isinstance(values, Tensor) else Tensor(values, requires_grad)


def constant(values: ArrayLike) -> Tensor:
    return tensor(values, requires_grad=False)


def _record(
    values: np.ndarray, parents: Tuple[Tensor, ...], grad_fn: GradFn, op: str
) -> Tensor:
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        return Tensor(values, True, parents, grad_fn, op)
    return Tensor(values, False, op=op)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a gradient back down to a scalar or row-vector operand shape"""
    if grad.shape == shape:
        return grad
    if int(np.prod(shape)) == 1:
        return np.asarray(grad.sum()).reshape(shape)
    # row vector broadcast over rows
    return grad.sum(axis=0).reshape(shape)


def _conform(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape == b.shape or a.values.size == 1 or b.values.size == 1:
        return
    raise ShapeError(op, a.shape, b.shape)


# ---------------------------------------------------------------------------
# elementwise
# ---------------------------------------------------------------------------


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = tensor(a), tensor(b)
    _conform("add", a, b)
    return _record(
        a.values + b.values,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
        "add",
    )


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = tensor(a), tensor(b)
    _conform("sub", a, b)
    return _record(
        a.values - b.values,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)),
        "sub",
    )


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Hadamard product (or scalar scaling)"""
    a, b = tensor(a), tensor(b)
    _conform("mul", a, b)
    return _record(
        a.values * b.values,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.values, a.shape),
            _unbroadcast(g * a.values, b.shape),
        ),
        "mul",
    )


hadamard = mul


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = tensor(a), tensor(b)
    _conform("div", a, b)
    out = a.values / b.values
    return _record(
        out,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.values, a.shape),
            _unbroadcast(-g * out / b.values, b.shape),
        ),
        "div",
    )


def neg(a: ArrayLike) -> Tensor:
    a = tensor(a)
    return _record(-a.values, (a,), lambda g: (-g,), "neg")


def scale(a: ArrayLike, c: float) -> Tensor:
    a = tensor(a)
    return _record(a.values * c, (a,), lambda g: (g * c,), "scale")


def sigmoid(a: ArrayLike) -> Tensor:
    a = tensor(a)
    out = expit(a.values)
    return _record(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def tanh(a: ArrayLike) -> Tensor:
    a = tensor(a)
    out = np.tanh(a.values)
    return _record(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def exp(a: ArrayLike) -> Tensor:
    a = tensor(a)
    out = np.exp(a.values)
    return _record(out, (a,), lambda g: (g * out,), "exp")


def log(a: ArrayLike) -> Tensor:
    a = tensor(a)
    return _record(np.log(a.values), (a,), lambda g: (g / a.values,), "log")


def square(a: ArrayLike) -> Tensor:
    a = tensor(a)
    return _record(a.values**2, (a,), lambda g: (2.0 * g * a.values,), "square")


def sqrt(a: ArrayLike, floor: float = 1e-12) -> Tensor:
    """Square root; the derivative is evaluated at max(sqrt(a), floor)"""
    a = tensor(a)
    out = np.sqrt(a.values)
    return _record(
        out, (a,), lambda g: (0.5 * g / np.maximum(out, floor),), "sqrt"
    )


def clip(a: ArrayLike, low: float, high: float) -> Tensor:
    a = tensor(a)
    inside = (a.values >= low) & (a.values <= high)
    return _record(
        np.clip(a.values, low, high), (a,), lambda g: (g * inside,), "clip"
    )


_ELEMENTWISE: Dict[str, Callable[..., Tensor]] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "hadamard": mul,
    "div": div,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "exp": exp,
    "log": log,
    "square": square,
    "neg": neg,
}


def elementwise(op_kind: str, a: ArrayLike, b: Optional[ArrayLike] = None) -> Tensor:
    """Dispatch an elementwise operation by name"""
    try:
        fn = _ELEMENTWISE[op_kind]
    except KeyError:
        raise ValueError(f"Unknown elementwise op {op_kind!r}") from None
    return fn(a) if b is None else fn(a, b)


# ---------------------------------------------------------------------------
# linear algebra and structure
# ---------------------------------------------------------------------------


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = tensor(a), tensor(b)
    if a.values.ndim != 2 or b.values.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    return _record(
        a.values @ b.values,
        (a, b),
        lambda g: (g @ b.values.T, a.values.T @ g),
        "matmul",
    )


def add_bias(a: ArrayLike, bias: ArrayLike) -> Tensor:
    """Add a row vector to every row of a matrix"""
    a, bias = tensor(a), tensor(bias)
    if a.values.ndim != 2 or bias.values.size != a.shape[1]:
        raise ShapeError("add_bias", a.shape, bias.shape)
    return _record(
        a.values + bias.values.reshape(1, -1),
        (a, bias),
        lambda g: (g, g.sum(axis=0).reshape(bias.shape)),
        "add_bias",
    )


def concat(parts: Sequence[ArrayLike], axis: int = 1) -> Tensor:
    tensors = tuple(tensor(p) for p in parts)
    try:
        out = np.concatenate([t.values for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError("concat", *(t.shape for t in tensors)) from None
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def grad_fn(g: np.ndarray) -> List[np.ndarray]:
        return [
            np.take(g, np.arange(lo, hi), axis=axis)
            for lo, hi in zip(bounds[:-1], bounds[1:])
        ]

    return _record(out, tensors, grad_fn, "concat")


def columns(a: ArrayLike, start: int, stop: int) -> Tensor:
    """Slice columns [start, stop) of a matrix"""
    a = tensor(a)

    def grad_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        full = np.zeros_like(a.values)
        full[:, start:stop] = g
        return (full,)

    return _record(a.values[:, start:stop], (a,), grad_fn, "columns")


def reverse_columns(a: ArrayLike) -> Tensor:
    a = tensor(a)
    return _record(a.values[:, ::-1], (a,), lambda g: (g[:, ::-1],), "reverse")


def reduce_sum(a: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = tensor(a)
    out = a.values.sum(axis=axis, keepdims=keepdims)

    def grad_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _record(out, (a,), grad_fn, "sum")


def reduce_mean(a: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = tensor(a)
    count = a.values.size if axis is None else a.shape[axis]
    return scale(reduce_sum(a, axis, keepdims), 1.0 / count)


def softmax(v: ArrayLike) -> Tensor:
    """Softmax of a vector, or of every row of a matrix"""
    v = tensor(v)
    if v.values.size == 0:
        raise ShapeError("softmax", v.shape)
    x = v.values if v.values.ndim > 1 else v.values.reshape(1, -1)
    shifted = np.exp(x - x.max(axis=1, keepdims=True))
    out = shifted / shifted.sum(axis=1, keepdims=True)

    def grad_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        g2 = g.reshape(out.shape)
        dot = (g2 * out).sum(axis=1, keepdims=True)
        return ((out * (g2 - dot)).reshape(v.shape),)

    return _record(out.reshape(v.shape), (v,), grad_fn, "softmax")


def logsumexp(a: ArrayLike, axis: int = 1) -> Tensor:
    """log Σ exp along an axis, keeping the reduced axis"""
    a = tensor(a)
    out = _np_logsumexp(a.values, axis=axis, keepdims=True)

    def grad_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g * np.exp(a.values - out),)

    return _record(out, (a,), grad_fn, "logsumexp")


# ---------------------------------------------------------------------------
# reverse pass
# ---------------------------------------------------------------------------


class GradientMap(Mapping[Tensor, np.ndarray]):
    """Gradients of one backward pass keyed by tensor identity.

    Looking up a tensor that did not contribute to the loss yields zeros.
    """

    def __init__(self, grads: Dict[int, np.ndarray], leaves: Dict[int, Tensor]):
        self._grads = grads
        self._leaves = leaves

    def __getitem__(self, key: Tensor) -> np.ndarray:
        grad = self._grads.get(key.node_id)
        return np.zeros_like(key.values) if grad is None else grad

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self._leaves.values())

    def __len__(self) -> int:
        return len(self._leaves)

    def __contains__(self, key: object) -> bool:
        return isinstance(key, Tensor) and key.node_id in self._grads


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node.node_id in visited:
            continue
        visited.add(node.node_id)
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and parent.node_id not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> GradientMap:
    """Accumulate d(loss)/d(leaf) into every tracked leaf and free the graph"""
    if loss.values.size != 1:
        raise ShapeError("backward (loss must be scalar)", loss.shape)

    grads: Dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.values)}
    leaves: Dict[int, Tensor] = {}
    if not loss.requires_grad:
        return GradientMap({}, leaves)

    for node in reversed(_topological_order(loss)):
        g = grads.pop(node.node_id, None) if node._parents else grads.get(node.node_id)
        if g is None:
            continue
        if node.is_leaf:
            leaves[node.node_id] = node
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        parent_grads = node._grad_fn(g) if node._grad_fn else ()
        for parent, pg in zip(node._parents, parent_grads):
            if pg is None or not parent.requires_grad:
                continue
            if parent.node_id in grads:
                grads[parent.node_id] = grads[parent.node_id] + pg
            else:
                grads[parent.node_id] = np.asarray(pg, dtype=np.float64)
        node._parents = ()
        node._grad_fn = None

    return GradientMap({k: grads[k] for k in leaves}, leaves)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------


def numerical_gradient(
    fn: Callable[[], Tensor], target: Tensor, eps: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of a scalar function w.r.t. ``target``"""
    grad = np.zeros_like(target.values)
    flat = target.values.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            upper = fn().item()
            flat[i] = original - eps
            lower = fn().item()
            flat[i] = original
            grad.reshape(-1)[i] = (upper - lower) / (2.0 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-3) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def gradient_check(
    fn: Callable[[], Tensor], inputs: Sequence[Tensor], eps: float = 1e-5
) -> float:
    """Largest relative error between analytic and numerical gradients"""
    for t in inputs:
        t.zero_grad()
    grads = backward(fn())
    return max(
        (relative_error(grads[t], numerical_gradient(fn, t, eps)) for t in inputs),
        default=0.0,
    )


# ---------------------------------------------------------------------------
# parameters and optimizer
# ---------------------------------------------------------------------------


class ParameterSet:
    """Ordered name -> trainable leaf tensor"""

    def __init__(self) -> None:
        self._params: Dict[str, Tensor] = {}

    def uniform(
        self, name: str, shape: Tuple[int, ...], fan_in: int, rng: np.random.Generator
    ) -> Tensor:
        bound = 1.0 / np.sqrt(max(fan_in, 1))
        return self.add(name, rng.uniform(-bound, bound, size=shape))

    def add(self, name: str, values: ArrayLike) -> Tensor:
        if name in self._params:
            raise ValueError(f"Duplicate parameter {name!r}")
        param = Tensor(values, requires_grad=True)
        self._params[name] = param
        return param

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def tensors(self) -> List[Tensor]:
        return list(self._params.values())

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def assign(self, values: Sequence[np.ndarray]) -> None:
        for p, v in zip(self._params.values(), values):
            p.values = np.array(v, dtype=np.float64)

    def to_dict(self) -> Dict[str, Dict[str, list]]:
        return {
            name: {"shape": list(p.shape), "values": p.values.reshape(-1).tolist()}
            for name, p in self._params.items()
        }

    def load_dict(self, arrays: Mapping[str, Mapping[str, list]]) -> None:
        missing = [n for n in self._params if n not in arrays]
        if missing:
            raise KeyError(missing)
        for name, p in self._params.items():
            shape = tuple(arrays[name]["shape"])
            if shape != p.shape:
                raise ShapeError(f"load {name}", p.shape, shape)
            p.values = np.array(arrays[name]["values"], dtype=np.float64).reshape(shape)


@dataclass(frozen=True)
class AdamState:
    step: int
    m: Tuple[np.ndarray, ...]
    v: Tuple[np.ndarray, ...]
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def adam_init(
    params: Sequence[Union[Tensor, np.ndarray]],
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> AdamState:
    shapes = [tensor(p).shape for p in params]
    return AdamState(
        step=0,
        m=tuple(np.zeros(s) for s in shapes),
        v=tuple(np.zeros(s) for s in shapes),
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(
    params: Sequence[Union[Tensor, np.ndarray]],
    grads: Sequence[np.ndarray],
    state: AdamState,
) -> Tuple[List[np.ndarray], AdamState]:
    """One bias-corrected Adam update; inputs are not mutated"""
    if not (len(params) == len(grads) == len(state.m)):
        raise ShapeError("adam_step", (len(params),), (len(grads),), (len(state.m),))

    step = state.step + 1
    new_values: List[np.ndarray] = []
    new_m: List[np.ndarray] = []
    new_v: List[np.ndarray] = []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        values = tensor(p).values
        g = np.asarray(g, dtype=np.float64)
        if g.shape != values.shape or m.shape != values.shape:
            raise ShapeError("adam_step", values.shape, g.shape)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**step)
        v_hat = v / (1.0 - state.beta2**step)
        new_values.append(values - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon))
        new_m.append(m)
        new_v.append(v)

    return new_values, AdamState(
        step=step,
        m=tuple(new_m),
        v=tuple(new_v),
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
    )
