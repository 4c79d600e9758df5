"""Central finite-difference check of autograd gradients on sampled parameters."""
import numpy as np
import torch

STEP = 1e-6
REL_TOL = 1e-3
ABS_FLOOR = 1e-8   # both gradients below this count as agreeing zeros


def relative_error(analytic: float, numeric: float) -> float:
    scale = max(abs(analytic), abs(numeric))
    if scale < ABS_FLOOR:
        return 0.0
    return abs(analytic - numeric) / scale


def sampled_gradient_errors(loss_fn, params, n_samples=50, seed=0, step=STEP):
    """Relative errors between autograd and central differences for ``n_samples`` parameter entries.

    ``loss_fn`` recomputes the scalar loss from scratch; ``params`` are the
    tensors to probe (double precision, requires_grad).
    """
    params = [p for p in params if p.requires_grad]
    for p in params:
        p.grad = None
    loss_fn().backward()
    grads = [p.grad.detach().clone() for p in params]
    sizes = np.array([p.numel() for p in params])
    rng = np.random.default_rng(seed)
    flat = rng.choice(sizes.sum(), size=min(n_samples, int(sizes.sum())), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    errors = []
    with torch.no_grad():
        for f in flat:
            i = int(np.searchsorted(offsets, f, side="right") - 1)
            j = int(f - offsets[i])
            view = params[i].view(-1)
            orig = view[j].item()
            view[j] = orig + step
            up = loss_fn().item()
            view[j] = orig - step
            down = loss_fn().item()
            view[j] = orig
            numeric = (up - down) / (2 * step)
            errors.append(relative_error(grads[i].view(-1)[j].item(), numeric))
    return np.array(errors)
