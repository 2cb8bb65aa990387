"""Regenerate the bundled model documents in src/hacest/models/.

Parameters are given as Kendall's tau targets, inverted per family and
rounded to four significant digits.  Every model is checked for the
sufficient nesting condition and for an exact frailty sampler.
"""

from pathlib import Path

from hacest import hac
from hacest.generators import Generator, theta_of_tau
from hacest.hac import check_snc, from_nested
from hacest.sample import has_exact_sampler

OUT = Path(__file__).resolve().parents[1] / "src" / "hacest" / "models"


def g(family, tau):
    return Generator(family, float(f"{theta_of_tau(family, tau):.4g}"))


def d5_19ac(t):
    return from_nested(5, (g("A", t[0]), [(g("19", t[1]), [1, 2]),
                                          (g("C", t[2]), [3, (g("C", t[3]), [4, 5])])]))


def d5_19a(t):
    return from_nested(5, (g("A", t[0]), [(g("19", t[1]), [1, 2]),
                                          (g("19", t[2]), [3, (g("19", t[3]), [4, 5])])]))


def d10(inner, t):
    return from_nested(10, (g("A", t[0]), [
        (g("C", t[1]), [1, 2, (g(inner, t[2]), [3, 4])]),
        (g("19", t[3]), [5, 6, (g("19", t[4]), [7, 8])]),
        9, 10]))


def d15(fam_b, fam_c, t):
    return from_nested(15, (g("C", t[0]), [
        (g("C", t[1]), [1, 2, (g("12", t[2]), [3, 4, 5])]),
        (g(fam_b, t[3]), [6, 7, 8]),
        (g(fam_c, t[4]), [9, 10, 11]),
        (g("20", t[5]), [12, 13, 14, 15])]))


MODELS = {
    # name: (tree, description)
    "d5_19AC_high": d5_19ac((0.12, 0.60, 0.43, 0.71)),
    "d5_19AC_low": d5_19ac((0.25, 0.45, 0.35, 0.50)),
    "d5_19A_high": d5_19a((0.12, 0.45, 0.60, 0.75)),
    "d5_19A_low": d5_19a((0.25, 0.40, 0.48, 0.55)),
    "d10_19_20AC_high": d10("20", (0.12, 0.45, 0.80, 0.45, 0.75)),
    "d10_19_20AC_low": d10("20", (0.25, 0.36, 0.66, 0.40, 0.50)),
    "d10_19AC_high": d10("C", (0.12, 0.45, 0.75, 0.45, 0.75)),
    "d10_19AC_low": d10("C", (0.25, 0.36, 0.50, 0.40, 0.50)),
    "d15_12_14_19_20C_high": d15("14", "19", (0.20, 0.33, 0.50, 0.60, 0.60, 0.45)),
    "d15_12_14_19_20C_low": d15("14", "19", (0.22, 0.30, 0.42, 0.36, 0.42, 0.45)),
    "d15_12_20C_high": d15("12", "C", (0.20, 0.33, 0.50, 0.60, 0.60, 0.45)),
    "d15_12_20C_low": d15("12", "C", (0.22, 0.30, 0.42, 0.36, 0.42, 0.45)),
    "forks15": from_nested(15, (Generator("C", 0.5), [
        (Generator("C", 1.0), [1, 2, (Generator("12", 2.0), [3, 4, 5])]),
        (Generator("14", 1.5), [6, 7, 8]),
        (g("19", 0.6), [9, 10, 11]),
        (g("20", 0.45), [12, 13, 14, 15])])),
    "hetero5": hac.HacTree(5, {6: (4, 5), 7: (1, 2), 8: (3, 6), 9: (7, 8)},
                           {6: Generator("20", 1.3), 7: Generator("19", 0.55),
                            8: Generator("C", 1.25), 9: Generator("A", 0.75)}),
}


def main():
    for name, tree in MODELS.items():
        ok, bad = check_snc(tree)
        assert ok, (name, bad)
        assert has_exact_sampler(tree), name
        hac.save(tree, OUT / f"{name}.json")
        print(name, hac.to_string(tree))


if __name__ == "__main__":
    main()
