"""Write data/iris.csv and data/wine.csv from the copies bundled with scikit-learn.

Seeds is not bundled anywhere we can reach; place it at data/seeds.csv by hand
(seven numeric columns followed by a `class` column).
"""
import csv
import pathlib

from sklearn import datasets

OUT = pathlib.Path(__file__).resolve().parent.parent / "data"


def export(name, bunch):
    names = [n.replace(" ", "_").replace("(", "").replace(")", "") for n in bunch.feature_names]
    path = OUT / f"{name}.csv"
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(names + ["class"])
        for row, y in zip(bunch.data, bunch.target):
            w.writerow([repr(float(v)) for v in row] + [bunch.target_names[y]])
    print(path, len(bunch.target))


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    export("iris", datasets.load_iris())
    export("wine", datasets.load_wine())
