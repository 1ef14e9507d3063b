# no equations: two free functions of three variables
system cartan-free
indep x, y, t
dep u, v
query cartan
