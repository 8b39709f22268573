"""Formulas and design matrices.

A model formula names the response, the main effects, their crossings and
any transformed terms. Categorical columns are dummy coded against their
first sorted level. A design built on one dataset can be rebuilt on a
modified copy (for example with the exposure forced to 1) and keeps the same
columns, which is what regression standardization relies on.

Run: python3 demos/01_formulas_and_designs.py
"""
import numpy as np

from drglm import Dataset, build_design, parse, rebuild
from drglm.errors import FormulaSyntaxError, UnsupportedFeatureError
from drglm.tabular import override_exposure

ds = Dataset.from_dict({
    "bwt": [2865.0, 2609, 2613, 3125, 2481, 1841],
    "smoker": [1.0, 1, 0, 0, 0, 1],
    "race": ["3. Other", "3. Other", "1. White", "1. White", "1. White", "2. Black"],
    "age": [28.0, 33, 29, 34, 37, 31],
})
print(ds)

ast = parse("bwt ~ smoker * (race + age) + I(age^2)")
print("\nparsed:", ast)
d = build_design(ast, ds)
print("columns:", ", ".join(d.column_names))
print(np.array2string(d.matrix, precision=0, suppress_small=True))

# the same design, every row set to smoker = 1
treated = rebuild(d, override_exposure(ds, "smoker", 1))
print("\nwith smoker = 1 for everyone, the smoker column is", treated[:, d.index("smoker")])
print("and smoker:age now equals age:", treated[:, d.index("smoker:age")])

# errors point at the problem
for text in ["bwt ~ smoker +", "bwt ~ age^2", "bwt ~ (age"]:
    try:
        parse(text)
    except (FormulaSyntaxError, UnsupportedFeatureError) as exc:
        print(f"\n{text!r}: {type(exc).__name__}: {exc}")
