# Wave method on the contact diffiety with m = 2:
#   W1 = x·xbar - u + ubar,  W2 = λ·v - vbar,  λ = 2.
# Solving W = 0, D̄W = 0 for the barred chart gives the forward seeds
#   xbar = u',  ubar = u - x·u',  vbar = 2v,
# so ubar carries the sign u - x·u'; the printed x·u' - u is rejected by the
# substitution check and the inverse is certified through order 3.
system wave
indep x
dep u, v
assume nonzero D(D(u))
assume nonzero wbar1_2
query wave order=3 w="x*xbar - u + ubar" w="2*v - vbar"
