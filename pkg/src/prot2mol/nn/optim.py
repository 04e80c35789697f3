"""Adam with a linear warm-up / linear decay learning-rate schedule."""

import numpy as np


def linear_schedule(step, peak_lr, warmup_steps, total_steps):
    """Learning rate used by optimizer update number ``step`` (0-based).

    Rises linearly from 0 at step 0 to ``peak_lr`` at ``warmup_steps``, then
    falls linearly to 0 at ``total_steps``. A warm-up longer than the run is
    clipped to the run length.
    """
    if total_steps <= 0:
        return 0.0
    warm = min(warmup_steps, total_steps)
    if step < warm:
        return peak_lr * step / warm
    if step >= total_steps:
        return 0.0
    return peak_lr * (total_steps - step) / (total_steps - warm)


class Adam:
    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.t = 0

    def step(self, params, grads, lr):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for k, p in params.tensors.items():
            g = grads[k]
            m, v = self.m[k], self.v[k]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            if lr:
                p -= (lr / c1) * m / (np.sqrt(v / c2) + self.eps)
