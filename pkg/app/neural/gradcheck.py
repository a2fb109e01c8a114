"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Mapping

import numpy as np

from app.neural.tensor import Tensor

logger = logging.getLogger(__name__)

REL_FLOOR = 1e-8


class GradcheckError(RuntimeError):
    def __init__(self, name: str, coordinate: tuple[int, ...], message: str) -> None:
        super().__init__(f"{name}{list(coordinate)}: {message}")
        self.name = name
        self.coordinate = coordinate


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_FLOOR)


def _scalar(out: Tensor, name: str, coordinate: tuple[int, ...]) -> float:
    if out.data.size != 1:
        raise GradcheckError(name, coordinate, f"program must return a scalar, got shape {out.shape}")
    value = float(out.data.reshape(-1)[0])
    if not np.isfinite(value):
        raise GradcheckError(name, coordinate, f"non-finite program value {value}")
    return value


def gradcheck_many(
    fn: Callable[[Mapping[str, Tensor]], Tensor],
    point: Mapping[str, np.ndarray],
    h: float = 1e-4,
    names: Iterable[str] | None = None,
    coordinates: Mapping[str, Iterable[int]] | None = None,
) -> dict[str, float]:
    """
    Compare backprop against central differences for several inputs at once.

    Parameters
    ----------
    fn : Callable
        Scalar program of named tensors.
    point : Mapping[str, np.ndarray]
        Evaluation point; converted to float64.
    h : float
        Finite-difference step.
    names : Iterable[str], optional
        Inputs to check; all of them by default.
    coordinates : Mapping[str, Iterable[int]], optional
        Flat indices to perturb per input; every coordinate by default.

    Returns
    -------
    dict[str, float]
        Maximum relative error per checked input.
    """
    base = {name: np.array(value, dtype=np.float64) for name, value in point.items()}
    checked = list(names) if names is not None else list(base)

    leaves = {name: Tensor(value.copy(), requires_grad=name in checked) for name, value in base.items()}
    out = fn(leaves)
    _scalar(out, "output", ())
    out.backward()

    errors: dict[str, float] = {}
    for name in checked:
        grad = leaves[name].grad
        analytic = grad if grad is not None else np.zeros_like(base[name])
        flat = base[name].reshape(-1)
        indices = coordinates.get(name) if coordinates and name in coordinates else range(flat.size)
        worst = 0.0
        for index in indices:
            coordinate = tuple(int(i) for i in np.unravel_index(index, base[name].shape))
            a = float(analytic.reshape(-1)[index])
            if not np.isfinite(a):
                raise GradcheckError(name, coordinate, f"non-finite analytic gradient {a}")
            original = flat[index]
            flat[index] = original + h
            plus = _scalar(fn({k: Tensor(v) for k, v in base.items()}), name, coordinate)
            flat[index] = original - h
            minus = _scalar(fn({k: Tensor(v) for k, v in base.items()}), name, coordinate)
            flat[index] = original
            numeric = (plus - minus) / (2.0 * h)
            worst = max(worst, relative_error(a, numeric))
        errors[name] = worst
        logger.debug("gradcheck %s: max relative error %.3e", name, worst)
    return errors


def gradcheck(
    fn: Callable[[Tensor], Tensor],
    point: np.ndarray,
    h: float = 1e-4,
    coordinates: Iterable[int] | None = None,
) -> float:
    """Maximum relative error between analytic and central-difference gradients of ``fn`` at ``point``."""
    errors = gradcheck_many(
        lambda tensors: fn(tensors["x"]),
        {"x": point},
        h=h,
        coordinates={"x": coordinates} if coordinates is not None else None,
    )
    return errors["x"]
