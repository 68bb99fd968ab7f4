import textwrap

import jinja2


__all__ = ["render_report", "write_table", "render_wer_report"]


_MARKS = {
    "dominant":             "dominant",
    "significantly_better": "better",
    "not_significant":      "no",
}


_dominance_template = """
    Significance of {{ table.metric }} ({{ "higher" if table.higher_is_better else "lower" }} is better, alpha = {{ table.alpha }})
    Rows are compared against columns.

    {{ "system"|cell }}{{ "mean"|cell }}{{ "std"|cell }}{% for name in table.names %}{{ name|cell }}{% endfor %}

    {% for name in table.names %}
    {% set row = loop.index0 %}
    {{ name|cell }}{{ "%.4f"|format(table.means[row])|cell }}{{ "%.4f"|format(table.stds[row])|cell }}
    {%- for label in table.labels[row] %}{{ (label|mark ~ (" (%.3f)"|format(table.epsilon[row][loop.index0]) if label else ""))|cell }}{% endfor %}

    {% endfor %}
"""


_wer_template = """
    Utterances:       {{ utterances }}
    Reference words:  {{ counts.N }}
    Correct:          {{ counts.C }}
    Substitutions:    {{ counts.S }}
    Deletions:        {{ counts.D }}
    Insertions:       {{ counts.I }}
    WER:              {{ "%.2f"|format(wer * 100) }}
    WIL:              {{ "%.2f"|format(wil * 100) }} ({{ variant }})
"""


def _render(source, origin, **context):
    try:
        source   = textwrap.dedent(source).strip() + "\n"
        environment = jinja2.Environment(
            trim_blocks=True, lstrip_blocks=True, undefined=jinja2.StrictUndefined)
        environment.filters["cell"] = lambda value: "{:<24}".format(value)
        environment.filters["mark"] = lambda label: _MARKS.get(label, "")
        compiled = environment.from_string(source)
    except jinja2.TemplateSyntaxError as e:
        e.args = ("{} (at {}:{})".format(e.message, origin, e.lineno),)
        raise
    return "\n".join(line.rstrip() for line in compiled.render(context).splitlines()) + "\n"


def render_report(table):
    """Human-readable dominance table; each cell names the row's standing over the
    column and its epsilon."""
    return _render(_dominance_template, "<dominance>", table=table)


def render_wer_report(counts, *, utterances, wer, wil, variant):
    return _render(_wer_template, "<wer>", counts=counts, utterances=utterances, wer=wer,
                   wil=wil, variant=variant)


def write_table(table, file):
    """Write the dominance table as TSV with ``system, mean, std`` followed by one label
    column per system."""
    with open(file, "w", encoding="utf-8") as f:
        f.write("\t".join(["system", "mean", "std"] + table.names) + "\n")
        for row, name in enumerate(table.names):
            cells = [name, "{:.6g}".format(table.means[row]), "{:.6g}".format(table.stds[row])]
            for column, label in enumerate(table.labels[row]):
                if label is None:
                    cells.append("-")
                else:
                    cells.append("{}:{:.4f}".format(label, table.epsilon[row][column]))
            f.write("\t".join(cells) + "\n")
