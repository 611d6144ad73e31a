#!/usr/bin/env python3

"""
Script to report the CPU time recorded in a run ledger, in hours.

Usage:
  python -m nvhp.misc.cpu_time_report --db-path wd/outputs/run_summaries.db [--by-experiment]
"""

import argparse
import sqlite3
import sys


def cpu_hours(db_path: str, by_experiment: bool = False):
    """Total CPU hours, or a {experiment: hours} mapping"""
    conn = sqlite3.connect(db_path)
    try:
        cursor = conn.cursor()
        if by_experiment:
            cursor.execute("SELECT experiment, SUM(cpu_time_seconds) FROM run_summaries "
                           "WHERE cpu_time_seconds IS NOT NULL GROUP BY experiment ORDER BY experiment")
            return {name: round((seconds or 0) / 3600, 1) for name, seconds in cursor.fetchall()}
        cursor.execute("SELECT SUM(cpu_time_seconds) FROM run_summaries WHERE cpu_time_seconds IS NOT NULL")
        result = cursor.fetchone()
        total_cpu_seconds = result[0] if result[0] is not None else 0
        return round(total_cpu_seconds / 3600, 1)
    finally:
        conn.close()


def main(argv=None):
    parser = argparse.ArgumentParser(description='Calculate total CPU time from the run ledger')
    parser.add_argument('--db-path', type=str, default='wd/outputs/run_summaries.db',
                        help='Path to the run_summaries database (default: wd/outputs/run_summaries.db)')
    parser.add_argument('--by-experiment', action='store_true', help='Break the total down per experiment')
    args = parser.parse_args(argv)

    try:
        report = cpu_hours(args.db_path, args.by_experiment)
    except sqlite3.Error as e:
        print(f"Database error: {e}", file=sys.stderr)
        return 1

    if isinstance(report, dict):
        for name, hours in report.items():
            print(f"{name}\t{hours}")
    else:
        print(f"{report}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
