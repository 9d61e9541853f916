"""Model-space geometry and chart Brownian motion.

Distances, ball volumes and completeness classification for the
hyperbolic half-space, plus the log-Brownian structure of the vertical
coordinate under the chart Euler scheme.
"""

import math

import numpy as np

from schrokato import ModelSpace, classify_completeness, distance, euclidean_radius, sample_path_chart, volume_ball

h2 = ModelSpace.hyperbolic(2)
h3 = ModelSpace.hyperbolic(3)

print("== half-space model geometry ==")
print(f"dist((0,1),(0,e))            = {distance(h2, [0, 1], [0, math.e]):.10f}  (vertical geodesic)")
print(f"vol(B(x,1)) in H^2           = {volume_ball(h2, [0, 1], 1.0):.6f}  (= 2 pi (cosh 1 - 1))")
print(f"vol(B(x,1)) in H^3           = {volume_ball(h3, [0, 0, 1], 1.0):.6f}  (= pi (sinh 2 - 2))")
print(f"Euclidean radius, accuracy 4 = {euclidean_radius(h2, 4.0):.6f}  (root of sinh r = 2r)")

print("\n== completeness/parabolicity classification ==")
for name, sp in [("R^2", ModelSpace.euclidean(2)), ("R^3", ModelSpace.euclidean(3)),
                 ("H^3", h3), ("(0,pi)", ModelSpace.interval(math.pi))]:
    rep = classify_completeness(sp)
    print(f"{name:>6}: stochastically complete = {rep.stochastically_complete:<18}"
          f" parabolic = {rep.parabolic}")

print("\n== chart Brownian motion on H^2: E log X_2(t) = -t/2 ==")
t, h, n = 1.0, 5e-3, 3000
logs = []
for i in range(n):
    path = sample_path_chart(h2, [0.0, 1.0], t, h, np.random.default_rng([100, i]))
    if path.alive:
        logs.append(math.log(path.states[-1][-1]))
mean = np.mean(logs)
sem = np.std(logs, ddof=1) / math.sqrt(len(logs))
print(f"empirical mean of log X_2(1): {mean:+.4f} +- {sem:.4f}   (target -0.5 + O(h))")
