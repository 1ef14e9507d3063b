# the contact diffiety of curves in (x, u, v)
system contact
indep x
dep u, v
query analyze order=4
