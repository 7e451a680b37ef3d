/** Parameter forms generated from server form specs: one widget per
 * ParameterDef, units shown, client-side range pre-validation, and inline
 * rendering of server-side validation reports. Unknown widget kinds render
 * as a visible fallback text input, never silently dropped. */
const KNOWN_KINDS = new Set(["int_input", "float_input", "dropdown"]);
export function validateField(widget, raw) {
    if (raw.trim() === "")
        return null; // empty -> server fills the default
    if (widget.kind === "dropdown") {
        const options = (widget.options ?? []).map(String);
        return options.includes(raw) ? null : `must be one of ${options.join(", ")}`;
    }
    const num = Number(raw);
    if (!Number.isFinite(num))
        return "must be a number";
    if (widget.kind === "int_input" && !Number.isInteger(num))
        return "must be an integer";
    if (widget.range) {
        const [lo, hi] = widget.range;
        if (num < lo || num > hi)
            return `out of range [${lo}, ${hi}]`;
    }
    return null;
}
export class FormModel {
    constructor(spec) {
        this.waveformName = spec.waveform_name;
        this.fields = spec.widgets.map((w) => ({
            widget: w,
            value: String(w.default),
            problem: null,
            serverProblem: null,
            fallback: !KNOWN_KINDS.has(w.kind),
        }));
    }
    setValue(label, raw) {
        const f = this.fields.find((x) => x.widget.label === label);
        if (!f)
            return;
        f.value = raw;
        f.problem = validateField(f.widget, raw);
        f.serverProblem = null;
    }
    /** True when every field passes client-side pre-validation. */
    get submittable() {
        return this.fields.every((f) => f.problem === null);
    }
    /** Typed parameter map for the session endpoints. */
    params() {
        const out = {};
        for (const f of this.fields) {
            if (f.value.trim() === "")
                continue;
            if (f.widget.kind === "dropdown" || f.fallback) {
                out[f.widget.label] = f.value;
            }
            else {
                out[f.widget.label] = Number(f.value);
            }
        }
        return out;
    }
    /** Attach a server validation report inline, field by field. */
    applyReport(violations) {
        for (const f of this.fields)
            f.serverProblem = null;
        for (const v of violations) {
            const f = this.fields.find((x) => x.widget.label === v.field);
            if (f)
                f.serverProblem = `${v.code}: ${v.message}`;
        }
    }
}
/** DOM rendering (browser only; the model above is test-covered). */
export function renderForm(model, onSubmit, doc = document) {
    const form = doc.createElement("form");
    form.className = "param-form";
    for (const field of model.fields) {
        const row = doc.createElement("label");
        row.className = "param-row";
        const caption = doc.createElement("span");
        caption.textContent = field.widget.units
            ? `${field.widget.label} (${field.widget.units})`
            : field.widget.label;
        row.appendChild(caption);
        let input;
        if (field.widget.kind === "dropdown") {
            input = doc.createElement("select");
            for (const opt of field.widget.options ?? []) {
                const o = doc.createElement("option");
                o.value = String(opt);
                o.textContent = String(opt);
                input.appendChild(o);
            }
            input.value = field.value;
        }
        else {
            input = doc.createElement("input");
            input.type = "text";
            input.value = field.value;
            if (field.fallback) {
                input.classList.add("fallback-widget");
                input.title = `unknown widget kind ${field.widget.kind}; raw value passed through`;
            }
        }
        input.name = field.widget.label;
        const note = doc.createElement("em");
        note.className = "field-problem";
        input.addEventListener("input", () => {
            model.setValue(field.widget.label, input.value);
            note.textContent = field.problem ?? "";
        });
        row.appendChild(input);
        row.appendChild(note);
        form.appendChild(row);
    }
    const submit = doc.createElement("button");
    submit.type = "submit";
    submit.textContent = "apply";
    form.appendChild(submit);
    form.addEventListener("submit", (ev) => {
        ev.preventDefault();
        if (model.submittable)
            onSubmit(model.params());
    });
    return form;
}
export function renderServerReport(form, model) {
    const notes = form.querySelectorAll(".field-problem");
    model.fields.forEach((f, i) => {
        const note = notes[i];
        if (note)
            note.textContent = f.serverProblem ?? f.problem ?? "";
    });
}
