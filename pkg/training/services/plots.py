"""
gnuplot script for a metrics CSV.
"""

from pathlib import Path

SCRIPT = """\
# gnuplot script; run with: gnuplot {script_name}
set datafile separator ","
set key autotitle columnhead
set terminal pngcairo size 1000,400
set output "{image}"
set multiplot layout 1,2 title "{title}"
set xlabel "epoch"
set ylabel "loss"
plot "{metrics}" using 1:3 with lines title "train loss"
set ylabel "accuracy"
set yrange [0:1]
plot "{metrics}" using 1:4 with lines title "train", \\
     "{metrics}" using 1:5 with lines title "test"
unset multiplot
"""


def write_gnuplot_script(metrics_path, script_path=None, title=None):
    """
    Write a gnuplot script plotting loss and accuracies of a metrics CSV.

    The script sits next to the CSV unless script_path is given and renders
    to a PNG of the same stem.
    """
    metrics_path = Path(metrics_path)
    script_path = Path(script_path) if script_path else metrics_path.with_suffix(".gp")
    script_path.write_text(
        SCRIPT.format(
            script_name=script_path.name,
            image=metrics_path.with_suffix(".png").name,
            title=title or metrics_path.parent.name,
            metrics=metrics_path.name,
        ),
        encoding="utf-8",
    )
    return script_path
