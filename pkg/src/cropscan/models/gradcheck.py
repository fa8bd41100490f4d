"""Finite-difference verification of the classifier head's gradients."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ContractError
from .classifier import LeafClassifier


@dataclass(frozen=True)
class GradientCheckEntry:
    parameter: str
    index: tuple[int, ...]
    analytic: float
    numeric: float
    relative_error: float


def dense_head_gradient_check(
    model: LeafClassifier,
    images: torch.Tensor,
    labels: torch.Tensor,
    n_params: int = 24,
    eps: float = 1e-4,
) -> list[GradientCheckEntry]:
    """Compare autograd gradients of the dense head against central differences.

    Runs in double precision with the network in eval mode so batch norm uses
    its running statistics and the loss surface is smooth in the parameters.
    The ``n_params`` parameters with the largest analytic gradient magnitude
    are probed (checking near-zero gradients would only measure rounding
    noise). Relative error is ``|a - n| / max(|a| + |n|, 1e-10)``.
    """
    if n_params < 1:
        raise ContractError(f"n_params must be >= 1, got {n_params}")
    model = model.double().eval()
    images = images.double()
    labels = labels.double()
    criterion = nn.BCEWithLogitsLoss()

    def loss_value() -> torch.Tensor:
        return criterion(model(images), labels)

    model.zero_grad()
    loss_value().backward()

    head_params = [(name, p) for name, p in model.head.named_parameters()]
    candidates: list[tuple[float, str, torch.Tensor, tuple[int, ...]]] = []
    for name, param in head_params:
        grad = param.grad
        if grad is None:
            continue
        flat = grad.flatten()
        for k in range(flat.numel()):
            index = tuple(int(v) for v in torch.unravel_index(torch.tensor(k), grad.shape))
            candidates.append((abs(float(flat[k])), f"head.{name}", param, index))
    candidates.sort(key=lambda c: -c[0])
    if len(candidates) < n_params:
        raise ContractError(
            f"dense head has only {len(candidates)} parameters, need {n_params}"
        )

    entries: list[GradientCheckEntry] = []
    with torch.no_grad():
        for _, name, param, index in candidates[:n_params]:
            analytic = float(param.grad[index])
            original = float(param[index])
            param[index] = original + eps
            plus = float(loss_value())
            param[index] = original - eps
            minus = float(loss_value())
            param[index] = original
            numeric = (plus - minus) / (2.0 * eps)
            rel = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-10)
            entries.append(
                GradientCheckEntry(
                    parameter=name,
                    index=index,
                    analytic=analytic,
                    numeric=numeric,
                    relative_error=rel,
                )
            )
    return entries
