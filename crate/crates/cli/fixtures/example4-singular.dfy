# du/dx = A·dv/dx + B with constants A, B: the singular case F'' = 0
system example4-singular
indep x
dep u, v
func A(0), B(0)
eq D(u) = A*D(v) + B
query analyze order=4
query growth order=4 depth=6 coord=w2_0
