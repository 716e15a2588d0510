#!/usr/bin/env python3
"""Convert the UCI Statlog German credit table (text-labelled variant shipped
with scorecardpy) into the Kaggle "German Credit Risk" column layout.

Usage: convert_german_credit.py germancredit.csv data/german_credit_data.csv
"""
import csv
import sys

JOB_CODES = {
    "unemployed/ unskilled - non-resident": 0,
    "unskilled - resident": 1,
    "skilled employee / official": 2,
    "management/ self-employed/ highly qualified employee/ officer": 3,
}
HOUSING = {"own": "own", "rent": "rent", "for free": "free"}


def main(src, dst):
    with open(src, newline="") as f:
        rows = list(csv.DictReader(f))
    with open(dst, "w", newline="") as f:
        out = csv.writer(f, lineterminator="\n")
        out.writerow(["", "Age", "Sex", "Job", "Housing", "Credit amount", "Duration"])
        for i, r in enumerate(rows):
            sex = "male" if r["personal_status_and_sex"].startswith("male") else "female"
            out.writerow([i, r["age_in_years"], sex, JOB_CODES[r["job"]],
                          HOUSING[r["housing"]], r["credit_amount"], r["duration_in_month"]])
    print(f"wrote {len(rows)} records to {dst}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
