"""Dense 2-D tensors with define-by-run reverse-mode differentiation.

Every tracked operation returns a :class:`Tensor` that remembers its inputs
and a closure mapping the output gradient to input gradients. The tensors
reachable from a loss form the tape; :func:`backward` walks it in reverse
topological order. Leaf gradients accumulate in ``Tensor.grad`` until
:func:`zero_grad` (or ``Module.zero_grad``) clears them.
"""

import numpy as np

__all__ = [
    "Tensor",
    "ShapeError",
    "NonFiniteError",
    "tensor",
    "zeros",
    "ones",
    "matmul",
    "affine",
    "add",
    "sub",
    "mul",
    "hadamard",
    "scale",
    "elementwise",
    "add_row",
    "mul_row",
    "concat_cols",
    "interpolate",
    "relu",
    "sigmoid",
    "tanh",
    "activation",
    "dropout",
    "sum_all",
    "mean_all",
    "mse_loss",
    "backward",
    "zero_grad",
]


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


class Tensor:
    """A row-major float64 matrix, optionally tracked for gradients.

    ``requires_grad`` leaves are trainable parameters; tensors produced from
    at least one tracked input are tape nodes. Everything else is a constant.
    """

    __slots__ = ("values", "requires_grad", "grad", "_parents", "_backward", "_op", "__weakref__")

    def __init__(self, values, requires_grad=False, _parents=(), _backward=None, _op="leaf"):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got array with shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ShapeError(f"tensor dimensions must be positive, got {arr.shape}")
        # any NaN or infinity makes the sum non-finite, so the elementwise scan
        # (which allocates a mask) only runs when the cheap test fails
        if not np.isfinite(arr.sum()) and not np.isfinite(arr).all():
            raise NonFiniteError(f"non-finite value produced by {_op}")
        self.values = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = _parents
        self._backward = _backward
        self._op = _op

    @property
    def shape(self):
        return self.values.shape

    @property
    def is_leaf(self):
        return not self._parents

    def item(self):
        if self.values.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.values[0, 0])

    def numpy(self):
        return self.values

    def detach(self):
        return Tensor(self.values)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag}, op={self._op})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)


def tensor(values, requires_grad=False):
    return Tensor(values, requires_grad=requires_grad)


def zeros(rows, cols):
    return Tensor(np.zeros((rows, cols)))


def ones(rows, cols):
    return Tensor(np.ones((rows, cols)))


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(values, parents, backward_fn, op):
    tracked = tuple(p for p in parents if p.requires_grad)
    if not tracked:
        return Tensor(values, _op=op)
    return Tensor(values, requires_grad=True, _parents=parents, _backward=backward_fn, _op=op)


def _same_shape(op, a, b):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# -- linear algebra ---------------------------------------------------------


def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    av, bv = a.values, b.values
    ra, rb = a.requires_grad, b.requires_grad

    def bw(g):
        return (g @ bv.T if ra else None), (av.T @ g if rb else None)

    return _make(av @ bv, (a, b), bw, "matmul")


def affine(terms, biases=(), activation=None):
    """``act(sum_k X_k @ W_k + sum_j b_j)`` as a single tape node.

    ``terms`` is a sequence of ``(X_k, W_k)`` pairs with matching output
    width; each bias is a ``1 x c`` row broadcast over the rows.
    ``activation`` is ``None``, ``"sigmoid"`` or ``"tanh"``. Fusing keeps one
    output array on the tape instead of one per product, partial sum and
    pre-activation, which matters when a whole epoch is held for a single
    backward pass.
    """
    if activation not in (None, "sigmoid", "tanh"):
        raise ValueError(f"affine activation must be None, 'sigmoid' or 'tanh', got {activation!r}")
    terms = [(_as_tensor(x), _as_tensor(w)) for x, w in terms]
    if not terms:
        raise ValueError("affine needs at least one (input, weight) term")
    rows, cols = terms[0][0].shape[0], terms[0][1].shape[1]
    for x, w in terms:
        if x.shape[1] != w.shape[0] or x.shape[0] != rows or w.shape[1] != cols:
            raise ShapeError(f"affine: term {x.shape} @ {w.shape} does not produce ({rows}, {cols})")
    for b in biases:
        if b.shape != (1, cols):
            raise ShapeError(f"affine: bias of shape {b.shape}, expected (1, {cols})")
    out = terms[0][0].values @ terms[0][1].values
    for x, w in terms[1:]:
        out += x.values @ w.values
    for b in biases:
        out += b.values
    if activation == "sigmoid":
        out = _sigmoid_values(out)
    elif activation == "tanh":
        np.tanh(out, out=out)
    parents = tuple(t for pair in terms for t in pair) + tuple(biases)
    flags = [t.requires_grad for t in parents]
    pairs = [(x.values, w.values) for x, w in terms]
    n_bias = len(biases)

    def bw(g):
        if activation == "sigmoid":
            g = g * out * (1.0 - out)
        elif activation == "tanh":
            g = g * (1.0 - out * out)
        grads = []
        for k, (xv, wv) in enumerate(pairs):
            grads.append(g @ wv.T if flags[2 * k] else None)
            grads.append(xv.T @ g if flags[2 * k + 1] else None)
        if n_bias:
            gb = g.sum(axis=0, keepdims=True)
            grads.extend(gb if f else None for f in flags[len(flags) - n_bias :])
        return grads

    return _make(out, parents, bw, "affine")


# -- elementwise ------------------------------------------------------------


def add(a, b):
    if not isinstance(a, Tensor):
        a, b = b, a
    if not isinstance(b, Tensor):
        s = float(b)
        return _make(a.values + s, (a,), lambda g: (g,), "add_scalar")
    _same_shape("add", a, b)
    return _make(a.values + b.values, (a, b), lambda g: (g, g), "add")


def sub(a, b):
    if not isinstance(a, Tensor):
        s = float(a)
        return _make(s - b.values, (b,), lambda g: (-g,), "rsub_scalar")
    if not isinstance(b, Tensor):
        s = float(b)
        return _make(a.values - s, (a,), lambda g: (g,), "sub_scalar")
    _same_shape("sub", a, b)
    return _make(a.values - b.values, (a, b), lambda g: (g, -g), "sub")


def scale(a, s):
    s = float(s)
    return _make(a.values * s, (a,), lambda g: (g * s,), "scale")


def mul(a, b):
    """Hadamard product; a plain number on either side means :func:`scale`."""
    if not isinstance(a, Tensor):
        a, b = b, a
    if not isinstance(b, Tensor):
        return scale(a, b)
    _same_shape("hadamard", a, b)
    av, bv = a.values, b.values
    ra, rb = a.requires_grad, b.requires_grad
    return _make(av * bv, (a, b), lambda g: ((g * bv if ra else None), (g * av if rb else None)), "hadamard")


hadamard = mul

_ELEMENTWISE = {"add": add, "sub": sub, "hadamard": mul, "scale": scale}


def elementwise(op, a, b):
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}") from None
    return fn(a, b)


def add_row(x, row):
    """``x + row`` with a 1 x c row broadcast over every row of x (bias add)."""
    if row.shape != (1, x.shape[1]):
        raise ShapeError(f"add_row: expected row of shape (1, {x.shape[1]}), got {row.shape}")
    return _make(x.values + row.values, (x, row), lambda g: (g, g.sum(axis=0, keepdims=True)), "add_row")


def mul_row(x, row):
    """``x * row`` with a 1 x c row broadcast over every row of x."""
    if row.shape != (1, x.shape[1]):
        raise ShapeError(f"mul_row: expected row of shape (1, {x.shape[1]}), got {row.shape}")
    xv, rv = x.values, row.values
    rx, rr = x.requires_grad, row.requires_grad

    def bw(g):
        return (g * rv if rx else None), ((g * xv).sum(axis=0, keepdims=True) if rr else None)

    return _make(xv * rv, (x, row), bw, "mul_row")


def interpolate(z, a, b):
    """``z * a + (1 - z) * b`` elementwise, the GRU state blend, as one node."""
    _same_shape("interpolate", z, a)
    _same_shape("interpolate", z, b)
    zv, av, bv = z.values, a.values, b.values
    rz, ra, rb = z.requires_grad, a.requires_grad, b.requires_grad

    def bw(g):
        return (
            g * (av - bv) if rz else None,
            g * zv if ra else None,
            g * (1.0 - zv) if rb else None,
        )

    return _make(bv + zv * (av - bv), (z, a, b), bw, "interpolate")


def concat_cols(a, b):
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"concat_cols: row counts differ, {a.shape} vs {b.shape}")
    split = a.shape[1]
    return _make(
        np.concatenate([a.values, b.values], axis=1),
        (a, b),
        lambda g: (g[:, :split], g[:, split:]),
        "concat_cols",
    )


# -- activations ------------------------------------------------------------


def relu(x):
    pos = x.values > 0
    return _make(np.where(pos, x.values, 0.0), (x,), lambda g: (g * pos,), "relu")


def _sigmoid_values(v):
    # exp(-|v|) never overflows; for v < 0 use e / (1 + e) = e * sigmoid(|v|)
    e = np.abs(v)
    np.negative(e, out=e)
    np.exp(e, out=e)
    out = 1.0 + e
    np.reciprocal(out, out=out)
    neg = v < 0
    out[neg] *= e[neg]
    return out


def sigmoid(x):
    out = _sigmoid_values(x.values)
    return _make(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def tanh(x):
    out = np.tanh(x.values)
    return _make(out, (x,), lambda g: (g * (1.0 - out * out),), "tanh")


_ACTIVATIONS = {"relu": relu, "sigmoid": sigmoid, "tanh": tanh}


def activation(op, x):
    try:
        fn = _ACTIVATIONS[op]
    except KeyError:
        raise ValueError(f"unknown activation {op!r}") from None
    return fn(x)


def dropout(x, rate, training, rng):
    """Inverted dropout. Identity in eval mode or when ``rate == 0``."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = rng.random(x.shape) >= rate
    factor = 1.0 / (1.0 - rate)
    out = x.values * keep
    out *= factor
    # only the boolean mask stays on the tape
    return _make(out, (x,), lambda g: (g * keep * factor,), "dropout")


# -- reductions and losses --------------------------------------------------


def sum_all(x):
    shape = x.shape
    return _make(x.values.sum(), (x,), lambda g: (np.full(shape, g[0, 0]),), "sum")


def mean_all(x):
    shape = x.shape
    n = x.values.size
    return _make(x.values.mean(), (x,), lambda g: (np.full(shape, g[0, 0] / n),), "mean")


def mse_loss(pred, target, mask=None):
    """Mean squared error over all elements (rows restricted by a node mask)."""
    target = _as_tensor(target)
    if pred.values.size != target.values.size:
        raise ShapeError(f"mse_loss: {pred.shape} vs {target.shape}")
    pv = pred.values
    tv = target.values.reshape(pv.shape)
    diff = pv - tv
    if mask is not None:
        mask = np.asarray(mask, dtype=bool).reshape(-1)
        if mask.shape[0] != pv.shape[0]:
            raise ShapeError(f"mse_loss: mask has {mask.shape[0]} entries for {pv.shape[0]} rows")
        weight = np.repeat(mask[:, None], pv.shape[1], axis=1).astype(np.float64)
        n = weight.sum()
        if n == 0:
            raise ValueError("mse_loss: mask selects no nodes")
        diff = diff * weight
    else:
        n = diff.size
    value = (diff * diff).sum() / n

    def bw(g):
        gd = g[0, 0] * 2.0 * diff / n
        return gd, -gd.reshape(target.shape)

    return _make(value, (pred, target), bw, "mse")


# -- reverse sweep ----------------------------------------------------------


def _topological(root):
    # Post-order DFS. A node is marked when it is expanded, not when it is
    # pushed, so a node shared by several consumers is emitted only after
    # every path to it has been explored.
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in reversed(node._parents):
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root):
    """Backpropagate from a scalar tracked tensor.

    Leaf gradients are added into ``leaf.grad``. Returns a dict mapping each
    tracked leaf reached from ``root`` to the gradient contributed by this
    call.
    """
    if root.shape != (1, 1):
        raise ShapeError(f"backward needs a scalar (1x1) root, got {root.shape}")
    if not root.requires_grad:
        raise ValueError("backward root is not tracked; no input requires grad")
    grads = {id(root): np.ones((1, 1))}
    contributed = {}
    for node in reversed(_topological(root)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            contributed[node] = g
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            prev = grads.get(key)
            grads[key] = pg if prev is None else prev + pg
    return contributed


def zero_grad(params):
    for p in params:
        p.grad = np.zeros_like(p.values)
