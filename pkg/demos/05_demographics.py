"""Ask which gender and age group a symptom class most likely belongs to.

The bundled 27-class demographic table answers argmax queries directly, and
a freshly fitted table shows how empty classes are flagged.
"""
from cpdforge import argmax_demographic, fit_demographic_table, load_reference_demographics, zero_support_categories

table = load_reference_demographics()
for cls in (0, 6, 13, 26):
    (gender, age), p = argmax_demographic(table, cls)
    print(f"class C{cls:<2d} -> {gender:6s} {age:14s} p={p:.2f}")
print(f"\nclass C0 never contains: {sorted(' '.join(c) for c in zero_support_categories(table, 0))[:4]} ...")

fitted = fit_demographic_table([0, 0, 2], [("Female", "20 - 29 Years"), ("Male", "20 - 29 Years"),
                                           ("Male", "80+ Years")], k=3)
print("\nfitted table, empty classes:", fitted.empty_classes)
print(fitted.to_csv())
