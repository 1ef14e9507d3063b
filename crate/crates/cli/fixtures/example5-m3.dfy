# du1/dx = F(x, u1, u2, u3) with ∂F/∂u3 ≠ 0
system example5-m3
indep x
dep u1, u2, u3
func F(4), P(4), P2(4), Z(3), Q(3), Q2(3)
eq D(u1) = F(x, u1, u2, u3)
assume nonzero F[0,0,0,1](x, u1, u2, u3)
query analyze order=3
# ansatz with unknown z: the reduced condition ∂p1/∂u3 = F^3·∂p2/∂u2'
query variations order=2 z=z p="P(x, u1, u2, u3)" p="P2(x, u1, u2, D(u2))"
# solution family p1 = -z·G + q, p2 = -z·u2' + q2 with G = ∫F^3 du3
query variations order=2 z="Z(x, u1, u2)" p="-Z(x, u1, u2)*Int(F[0,0,0,1](x, u1, u2, u3), u3) + Q(x, u1, u2)" p="-Z(x, u1, u2)*D(u2) + Q2(x, u1, u2)"
