"""Print the layer table and exact parameter count of every model."""

from semgnet import models
from semgnet.reporting import parameter_report


def main():
    for name in models.MODEL_NAMES:
        spec = models.model_spec(name, class_count=8)
        count = models.param_count(spec)
        print(f"\n{name}  (input {spec.input_shape[1]}x{spec.input_shape[2]},"
              f" {count.total:,} parameters)")
        for label, n in count.per_layer:
            print(f"  {label:24s} {n:>12,}")

    report = parameter_report(class_count=8)
    print("\nexact totals vs the nominal millions they are usually quoted at:")
    for name, row in report["models"].items():
        print(f"  {name:8s} exact {row['exact_millions']:.4f} M   "
              f"nominal {row['nominal_millions']:.2f} M   "
              f"difference {row['discrepancy_millions']:+.4f} M")
    print(f"\nsmallest/largest total ratio: {report['compact_ratio']:.4f}")
    for note in report["notes"]:
        print(f"  note: {note}")


if __name__ == "__main__":
    main()
