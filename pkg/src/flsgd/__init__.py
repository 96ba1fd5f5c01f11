"""Online regularized SGD for functional linear regression in an RKHS."""
