"""Thyroid nodule malignancy prediction toolkit.

Native implementations of six tabular classifiers behind one train/score
interface, patient-grouped cross-validation with repetitions, bootstrap
uncertainty summaries, permutation predictor importance, and a CLI that
renders the report tables and figure data.
"""

__version__ = "0.1.0"
