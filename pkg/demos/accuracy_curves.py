"""Guaranteed accuracy against attack radius for two noise levels, with an empirical attack.

Run with ``python3 demos/accuracy_curves.py``. Takes about a minute.
"""
from randcert import AttackBudget, benchmark_problem, curve_crossover, guaranteed_accuracy_curve


def main():
    data, base = benchmark_problem()
    grid = [0.0, 0.1, 0.2, 0.25, 0.3, 0.4, 0.5]
    budget = AttackBudget(random_restarts=2, refinement_steps=4, mc_samples_per_query=2000)
    curves = {}
    for sigma in (0.25, 0.5):
        curves[sigma] = guaranteed_accuracy_curve(base, data, sigma, 2.0, grid, m=None)
        attacked = guaranteed_accuracy_curve(base, data, sigma, 2.0, grid, m=2000, attack_budget=budget, threads=4)
        print(f"\nsigma = {sigma}")
        print("alpha  guaranteed  attacked")
        for row, att in zip(curves[sigma], attacked):
            print(f"{row.alpha2:5.2f}  {row.guaranteed_acc:10.4f}  {att.empirical_attacked_acc:8.4f}")
    print(f"\nlow-noise curve falls below high-noise curve at alpha = {curve_crossover(curves[0.25], curves[0.5])}")


if __name__ == "__main__":
    main()
