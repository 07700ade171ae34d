"""Adam with bias correction, over lists of parameter arrays.

Non-finite gradients skip the update for that array and bump a
diagnostics counter instead of poisoning the moments.
"""

import numpy as np


class Adam:
    def __init__(self, params, lr=5e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.skipped = 0

    def step(self, grads):
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for i, g in enumerate(grads):
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                self.skipped += 1
                continue
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            self.params[i] -= self.lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps)

    def state_arrays(self):
        return self.m + self.v
