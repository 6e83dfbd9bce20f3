from modes_fixedpoint.management.base import FixedPointCommand


class Command(FixedPointCommand):
    help = 'Compute p-mode eigenvalues lambda_n = 1/mu_n from the fixed points mu = 1/Lambda_n(mu)'
    branch = 'p'
    bound_option = 'mu0'

    def solve(self, service, profile, spec, n_range, bound, ground):
        return service.solve_pmodes(profile, spec, n_range, bound, ground)
