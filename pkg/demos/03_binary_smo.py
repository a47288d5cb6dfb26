"""A two-point SVM solved by SMO, checked against the closed form.

With one point of each class at x = -1 and x = +1 and gamma = 1/2, the kernel
between them is exp(-2).  Symmetry puts the bias at zero, and the margin
condition y f(x) = 1 on either point gives alpha * (1 - exp(-2)) = 1.
"""
import math

import numpy as np

from gaitsvm.svm import KernelParams, TrainConfig, smo_train

x = np.zeros((2, 5))
x[0, 0], x[1, 0] = -1.0, 1.0
model = smo_train(x, [-1, 1], KernelParams(gamma=0.5), TrainConfig(c=10.0))

print("alpha from SMO:      ", np.abs(model.dual_coefs))
print("alpha in closed form:", 1 / (1 - math.exp(-2)))
print("bias:", model.bias)
print("iterations:", model.n_iter, "converged:", model.converged)

probe = np.zeros((5, 5))
probe[:, 0] = np.linspace(-2, 2, 5)
for xv, f in zip(probe[:, 0], model.decision_function(probe)):
    print(f"  f({xv:+.1f}) = {f:+.4f}")

print("\nwith C = 0.3 the box binds and both multipliers sit at C:")
capped = smo_train(x, [-1, 1], KernelParams(gamma=0.5), TrainConfig(c=0.3))
print("  alpha =", np.abs(capped.dual_coefs))
