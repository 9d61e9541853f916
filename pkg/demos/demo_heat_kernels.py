"""Tour of the closed-form heat kernels and their sanity identities.

Evaluates the Euclidean, hyperbolic and Dirichlet-interval kernels,
checks total mass, the Chapman-Kolmogorov identity and Green functions,
and shows the interval kernel sitting below the full-line kernel.
"""

import math

from schrokato import ModelSpace, ck_residual, eval_kernel, green, kernel_mass, make_kernel

e3 = ModelSpace.euclidean(3)
h3 = ModelSpace.hyperbolic(3)
interval = ModelSpace.interval(math.pi)

k_e3 = make_kernel(e3)
k_h3 = make_kernel(h3)
k_int = make_kernel(interval)

print("== diagonal values at t = 1 ==")
print(f"R^3:        p(1,0,0)      = {eval_kernel(k_e3, 1.0, [0,0,0], [0,0,0]):.10f}"
      f"   (closed form {(2*math.pi)**-1.5:.10f})")
print(f"H^3:        p(1,x,x)      = {eval_kernel(k_h3, 1.0, [0,0,1], [0,0,1]):.10f}"
      f"   (= (2 pi)^-3/2 e^-1/2)")
print(f"(0,pi):     p_U(2,c,c)    = {eval_kernel(k_int, 2.0, [math.pi/2], [math.pi/2]):.10f}")

print("\n== kernel mass (stochastic completeness) ==")
for name, k, x in [("R^3", k_e3, [0, 0, 0]), ("H^3", k_h3, [0, 0, 1])]:
    for t in (0.1, 1.0, 10.0):
        print(f"{name}: mass(t={t:>4}) = {kernel_mass(k, t, x):.12f}")
mass = kernel_mass(k_int, 2.0, [math.pi / 2])
print(f"(0,pi) Dirichlet: mass(t=2) = {mass:.6f}  < 1 (probability killed at the boundary)")

print("\n== Chapman-Kolmogorov residuals ==")
print(f"R^1  s=t=0.5:  {ck_residual(make_kernel(ModelSpace.euclidean(1)), .5, .5, [0.], [1.]):.2e}")
print(f"H^3  s=t=0.5:  {ck_residual(k_h3, 0.5, 0.5, [0,0,1], [0,0,1]):.2e}")

print("\n== Green functions ==")
g3 = green(k_e3, [0, 0, 0], [1, 0, 0])
print(f"R^3: G(x,y) at distance 1 = {g3.value:.10f}  (= 1/(2 pi))")
g2 = green(make_kernel(ModelSpace.euclidean(2)), [0, 0], [1, 0])
print(f"R^2: verdict = {g2.verdict} (no positive Green function)")
gh = green(k_h3, [0, 0, 1], [0, 0, math.e])
print(f"H^3: G at distance 1 = {gh.value:.10f}  (= e^-r / (2 pi sinh r))")

print("\n== domain monotonicity p_U <= p ==")
x = math.pi / 2
pU = eval_kernel(k_int, 2.0, [x], [x])
pR = eval_kernel(make_kernel(ModelSpace.euclidean(1)), 2.0, [x], [x])
print(f"p_U(2,c,c) = {pU:.6f}  <=  p_R(2,c,c) = {pR:.6f}")
