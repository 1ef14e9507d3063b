# du/dx = F(dv/dx), regular case DF' = F''(v')·v'' ≠ 0
system example4
indep x
dep u, v
func F(1)
eq D(u) = F(D(v))
assume nonzero F''(D(v))*D(D(v))
query analyze order=4
