from django.core.management.base import BaseCommand, CommandError

from apps.design import conf
from apps.design.exceptions import DesignError, InvalidInstance
from apps.design.generators import GENERATORS, generate
from apps.design.instances import InstanceFile
from apps.design.oracle import run_checks
from apps.design.relax import A_DESIGN, D_DESIGN, E_DESIGN, ObjectiveKind, solve_relaxation, validate_fractional
from apps.design.rounding import certify, round_design
from apps.reports.utils import BENCH_HEADERS, PhaseTimer, build_report, export_table, save_run, write_report

EXIT_CERTIFY_FAILED = 4
EXIT_VERIFY_FAILED = 6


def parse_size(text):
    """'d:k:m' (m may be omitted for basis-copies)."""
    try:
        parts = [int(part) for part in text.split(':')]
    except ValueError:
        raise InvalidInstance(f"Size {text!r} is not of the form d:k:m")
    if len(parts) not in (2, 3):
        raise InvalidInstance(f"Size {text!r} is not of the form d:k:m")
    return parts[0], parts[1], parts[2] if len(parts) == 3 else None


class Command(BaseCommand):
    help = 'Solve, round, verify or benchmark experimental design instances'

    def add_arguments(self, parser):
        parser.add_argument('action', choices=['solve', 'round', 'verify', 'bench'])
        parser.add_argument('target', help='Instance file, or the generator name for bench')
        parser.add_argument('--objective', choices=['D', 'A', 'E', 'ratio'])
        parser.add_argument('--lprime', type=int, help="l' of the ratio objective")
        parser.add_argument('--l', type=int, help='l of the ratio objective')
        parser.add_argument('--tol', type=float, help='Relaxation tolerance')
        parser.add_argument('--input-x', action='store_true', help='Round the x given in the instance file')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--max-leaves', type=int, help='Leaf limit for verify')
        parser.add_argument('--sizes', nargs='+', default=['4:8:20'], help='Bench sizes as d:k:m')
        parser.add_argument('--count', type=int, default=1, help='Bench instances per size')
        parser.add_argument('--out', help='Write the JSON report to this path')
        parser.add_argument('--export', help='Write the bench table to this path')
        parser.add_argument('--format', choices=['csv', 'xlsx'], default='csv')
        parser.add_argument('--save', action='store_true', help='Store the run in the database')

    def handle(self, *args, **options):
        action = options['action']
        timer = PhaseTimer()
        try:
            report, exit_code = getattr(self, f'run_{action}')(options, timer)
        except DesignError as exc:
            message = f"{type(exc).__name__}: {exc}"
            if options['save']:
                save_run(action, {}, timer, status='failed', error_message=message)
            raise CommandError(message, returncode=exc.exit_code) from exc

        report['timings'] = dict(timer.timings)
        write_report(report, path=options['out'], stream=self.stdout)
        if options['save']:
            save_run(action, report, timer, status='completed' if exit_code == 0 else 'failed')
        if exit_code == EXIT_CERTIFY_FAILED:
            raise CommandError('Rounded solution is not within the theorem bound', returncode=exit_code)
        if exit_code == EXIT_VERIFY_FAILED:
            raise CommandError('Verification failed', returncode=exit_code)
        self.stderr.write(self.style.SUCCESS(f'{action} finished in {timer.total:.3f}s'))

    def load(self, options):
        instance_file = InstanceFile.read(options['target'])
        return instance_file, instance_file.instance()

    def kind(self, instance_file, options):
        return instance_file.objective_kind(options['objective'], options['lprime'], options['l'])

    def fractional(self, instance_file, inst, kind, options, timer):
        with timer.phase('relax'):
            if options['input_x']:
                if instance_file.x is None:
                    raise InvalidInstance('--input-x given but the instance file has no x')
                return validate_fractional(inst, instance_file.x, kind)
            return solve_relaxation(inst, kind, tol=options['tol'])

    def run_solve(self, options, timer):
        instance_file, inst = self.load(options)
        kind = self.kind(instance_file, options)
        frac = self.fractional(instance_file, inst, kind, options, timer)
        return build_report('solve', instance_file, kind, frac=frac), 0

    def run_round(self, options, timer):
        instance_file, inst = self.load(options)
        kind = self.kind(instance_file, options)
        frac = self.fractional(instance_file, inst, kind, options, timer)
        with timer.phase('round'):
            result = round_design(inst, frac, kind)
        certified = certify(result, frac, kind)
        report = build_report('round', instance_file, kind, frac=frac, result=result, certified=certified)
        if not certified:
            self.stderr.write(self.style.ERROR(
                f'{kind}: ratio {result.certified_ratio:.6g} exceeds bound {result.theorem_bound:.6g}'
            ))
        return report, 0 if certified else EXIT_CERTIFY_FAILED

    def run_verify(self, options, timer):
        instance_file, inst = self.load(options)
        if options['objective'] or instance_file.objective:
            kinds = [self.kind(instance_file, options)]
        else:
            kinds = [D_DESIGN, A_DESIGN, E_DESIGN]
        max_leaves = options['max_leaves'] or conf.get("MAX_LEAVES")
        results = []
        failed = False
        for kind in kinds:
            frac = self.fractional(instance_file, inst, kind, options, timer)
            with timer.phase(f'verify {kind}'):
                checks = run_checks(inst, frac, kind, max_leaves=max_leaves, seed=options['seed'])
            for check in checks:
                style = self.style.SUCCESS if check.passed else self.style.ERROR
                status = 'PASS' if check.passed else 'FAIL'
                self.stderr.write(style(f'[{status}] {kind} {check.name}: {check.detail}'))
            failed = failed or not all(check.passed for check in checks)
            results.append({'objective': kind.as_dict(), 'checks': [check.as_dict() for check in checks]})
        report = build_report('verify', instance_file)
        report['results'] = results
        report['passed'] = not failed
        return report, EXIT_VERIFY_FAILED if failed else 0

    def run_bench(self, options, timer):
        generator = options['target']
        if generator not in GENERATORS:
            raise InvalidInstance(f"Unknown generator {generator!r}; choose from {', '.join(GENERATORS)}")
        if options['objective']:
            kinds = [ObjectiveKind.parse(options['objective'], options['lprime'], options['l'])]
        else:
            kinds = [D_DESIGN, A_DESIGN, E_DESIGN]
        rows = []
        for size in options['sizes']:
            d, k, m = parse_size(size)
            for offset in range(options['count']):
                seed = options['seed'] + offset
                instance_file = generate(generator, d, k, m, seed)
                inst = instance_file.instance()
                for kind in kinds:
                    kind.validate(d)
                    with timer.phase('relax'):
                        frac = solve_relaxation(inst, kind, tol=options['tol'])
                    with timer.phase('round'):
                        result = round_design(inst, frac, kind)
                    rows.append({
                        'generator': generator,
                        'd': d,
                        'k': k,
                        'm': inst.m,
                        'seed': seed,
                        'objective': str(kind),
                        'instance_digest': instance_file.digest(),
                        'fractional_objective': result.fractional_objective,
                        'integral_objective': result.integral_objective,
                        'certified_ratio': result.certified_ratio,
                        'theorem_bound': result.theorem_bound,
                        'within_bound': certify(result, frac, kind),
                        'solver_certified': frac.certified,
                    })
        if options['export']:
            export_table(rows, options['export'], BENCH_HEADERS, fmt=options['format'])
        for row in rows:
            style = self.style.SUCCESS if row['within_bound'] else self.style.ERROR
            self.stderr.write(style(
                f"{row['objective']:>10} d={row['d']} k={row['k']} m={row['m']} seed={row['seed']}: "
                f"ratio {row['certified_ratio']:.6g} <= {row['theorem_bound']:.6g}"
            ))
        report = build_report('bench', None)
        report['generator'] = generator
        report['rows'] = rows
        return report, 0
