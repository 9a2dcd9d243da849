#!/usr/bin/env python3
"""Write headered CSV copies of the UCI Adult and German Credit datasets.

The raw UCI files are taken from --raw-dir when given. Otherwise the
`responsibly` wheel, which bundles unmodified copies of both datasets, is
fetched with pip and the files are read from it.

Output (in --out, default ./data):
  adult.csv   48,842 rows (adult.data followed by adult.test)
  german.csv  1,000 rows
"""

import argparse
import csv
import pathlib
import subprocess
import sys
import tempfile
import zipfile

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]

GERMAN_COLUMNS = [
    "status", "duration", "credit_history", "purpose", "credit_amount",
    "savings", "present_employment", "installment_rate", "status_sex",
    "other_debtors", "present_residence_since", "property", "age",
    "installment_plans", "housing", "number_of_existing_credits", "job",
    "number_of_people_liable_for", "telephone", "foreign_worker", "credit",
]


def locate_raw(raw_dir):
    if raw_dir is not None:
        root = pathlib.Path(raw_dir)
        return {
            "adult.data": root / "adult.data",
            "adult.test": root / "adult.test",
            "german.data": root / "german.data",
        }
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="uci_"))
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
         "-d", str(tmp), "responsibly==0.1.2"],
        check=True)
    wheel = next(tmp.glob("responsibly-*.whl"))
    with zipfile.ZipFile(wheel) as zf:
        zf.extractall(tmp / "x")
    base = tmp / "x" / "responsibly" / "dataset"
    return {
        "adult.data": base / "adult" / "adult.data",
        "adult.test": base / "adult" / "adult.test",
        "german.data": base / "german" / "german.data",
    }


def adult_rows(path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != len(ADULT_COLUMNS):
                raise ValueError(f"{path}: unexpected row: {line!r}")
            yield fields


def german_rows(path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            fields = line.split()
            if not fields:
                continue
            if len(fields) != len(GERMAN_COLUMNS):
                raise ValueError(f"{path}: unexpected row: {line!r}")
            yield fields


def write_csv(path, header, rows):
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
            count += 1
    return count


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--raw-dir", help="directory holding adult.data, adult.test, german.data")
    parser.add_argument("--out", default="data", help="output directory")
    args = parser.parse_args()

    raw = locate_raw(args.raw_dir)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def adult_all():
        yield from adult_rows(raw["adult.data"])
        yield from adult_rows(raw["adult.test"])

    n_adult = write_csv(out / "adult.csv", ADULT_COLUMNS, adult_all())
    n_german = write_csv(out / "german.csv", GERMAN_COLUMNS, german_rows(raw["german.data"]))
    print(f"adult.csv: {n_adult} rows")
    print(f"german.csv: {n_german} rows")


if __name__ == "__main__":
    main()
