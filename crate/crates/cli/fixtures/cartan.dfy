# one first-order equation in two independent variables
system cartan-single
indep x, y
dep u
func f(4)
eq D_y(u) = f(x, y, u, D_x(u))
query cartan
