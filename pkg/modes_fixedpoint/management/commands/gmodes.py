from modes_fixedpoint.management.base import FixedPointCommand


class Command(FixedPointCommand):
    help = 'Compute g-mode eigenvalues as fixed points lambda = 1/Lambda_n(lambda)'
    branch = 'g'
    bound_option = 'lambda0'

    def solve(self, service, profile, spec, n_range, bound, ground):
        return service.solve_gmodes(profile, spec, n_range, bound, ground)
