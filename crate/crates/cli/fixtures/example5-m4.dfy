# du1/dx = F(x, u1, u2, u3, u4) with ∂F/∂u4 ≠ 0
system example5-m4
indep x
dep u1, u2, u3, u4
func F(5), Z(4), Q(4), Q2(4), Q3(4)
eq D(u1) = F(x, u1, u2, u3, u4)
assume nonzero F[0,0,0,0,1](x, u1, u2, u3, u4)
query analyze order=3
query variations order=1 z="Z(x, u1, u2, u3)" p="-Z(x, u1, u2, u3)*Int(F[0,0,0,0,1](x, u1, u2, u3, u4), u4) + Q(x, u1, u2, u3)" p="-Z(x, u1, u2, u3)*D(u2) + Q2(x, u1, u2, u3)" p="-Z(x, u1, u2, u3)*D(u3) + Q3(x, u1, u2, u3)"
