/** Operator console assembly: devices, catalog + forms, session controls,
 * schedule editor, waterfall, power, and the run log viewer. All rendered
 * state is server-acknowledged; the stream only confirms, never predicts. */
import { ApiClient, ApiError, StreamConnection } from "./api.js";
import { FormModel, renderForm, renderServerReport } from "./forms.js";
import { ScheduleDraft } from "./schedule.js";
import { SessionStore, enabledControls } from "./state.js";
import { WaterfallModel, WaterfallView } from "./waterfall.js";
const api = new ApiClient("");
const store = new SessionStore();
const waterfall = new WaterfallModel(220);
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing #${id}`);
    return node;
}
function toast(message) {
    const box = el("toasts");
    const item = document.createElement("div");
    item.className = "toast";
    item.textContent = message;
    box.appendChild(item);
    setTimeout(() => item.remove(), 6000);
}
async function guard(action) {
    try {
        const out = await action;
        return out;
    }
    catch (e) {
        if (e instanceof ApiError) {
            store.applyError(`${e.code}: ${e.body.error.detail}`);
            toast(`${e.code}: ${e.body.error.detail}`);
            await resync();
            return null;
        }
        throw e;
    }
}
async function resync() {
    // after a rejected command, re-read authoritative facts
    const power = await api.power().catch(() => null);
    if (power)
        store.applyPower(power);
}
// ---------------------------------------------------------------------------
// devices
async function renderDevices() {
    const devices = await api.devices();
    const box = el("device-rows");
    box.textContent = "";
    for (const d of devices) {
        const tr = document.createElement("tr");
        const select = document.createElement("select");
        for (const role of ["unassigned", "transmitter", "monitor"]) {
            const o = document.createElement("option");
            o.value = role;
            o.textContent = role;
            select.appendChild(o);
        }
        select.value = d.role;
        select.addEventListener("change", async () => {
            const ok = await guard(api.assignRole(d.device_id, select.value));
            if (!ok)
                select.value = d.role;
        });
        const cells = [
            d.device_id,
            d.transport,
            `${(d.min_frequency / 1e6).toFixed(0)}-${(d.max_frequency / 1e9).toFixed(1)}G MHz`,
            `${(d.max_sample_rate / 1e6).toFixed(0)} Msps`,
        ];
        for (const c of cells) {
            const td = document.createElement("td");
            td.textContent = c;
            tr.appendChild(td);
        }
        const td = document.createElement("td");
        td.appendChild(select);
        tr.appendChild(td);
        box.appendChild(tr);
    }
}
// ---------------------------------------------------------------------------
// waveform catalog and forms
let catalog = [];
let activeForm = null;
async function renderCatalog() {
    catalog = await api.waveforms();
    const list = el("catalog");
    list.textContent = "";
    for (const d of catalog) {
        const li = document.createElement("li");
        const btn = document.createElement("button");
        btn.textContent = `${d.waveform_name} [${d.category}]`;
        btn.addEventListener("click", () => openForm(d.waveform_name));
        li.appendChild(btn);
        list.appendChild(li);
    }
}
async function openForm(waveformId) {
    const spec = await api.form(waveformId);
    const model = new FormModel(spec);
    const holder = el("form-holder");
    holder.textContent = "";
    const title = document.createElement("h3");
    title.textContent = `${waveformId} parameters`;
    holder.appendChild(title);
    const node = renderForm(model, (params) => submitForm(waveformId, params));
    holder.appendChild(node);
    activeForm = { model, node };
}
async function submitForm(waveformId, params) {
    const running = store.view.session.state === "Running";
    try {
        if (running) {
            const out = await api.switch(waveformId, params);
            store.applySwitchAck(out.switch, out.session);
        }
        else {
            store.applyAck(await api.start(waveformId, params));
        }
    }
    catch (e) {
        if (e instanceof ApiError && e.body.error.report && activeForm) {
            activeForm.model.applyReport(e.body.error.report.violations);
            renderServerReport(activeForm.node, activeForm.model);
        }
        else if (e instanceof ApiError) {
            store.applyError(`${e.code}: ${e.body.error.detail}`);
            toast(e.message);
        }
        else {
            throw e;
        }
    }
}
// ---------------------------------------------------------------------------
// session controls
function renderControls() {
    const enabled = enabledControls(store.view.session.state);
    const buttons = [
        ["start", "btn-start"],
        ["pause", "btn-pause"],
        ["resume", "btn-resume"],
        ["stop", "btn-stop"],
        ["switch", "btn-switch"],
        ["schedule", "btn-schedule"],
    ];
    for (const [control, id] of buttons) {
        el(id).disabled = !enabled.has(control);
    }
    el("session-state").textContent =
        `${store.view.session.state}` +
            (store.view.session.active_waveform ? ` (${store.view.session.active_waveform})` : "");
    const sw = store.view.lastSwitch;
    el("last-switch").textContent = sw
        ? `${sw.from_waveform ?? "-"} → ${sw.to_waveform}, gap ${(sw.gap_delta_s * 1e9).toFixed(0)} ns`
        : "none";
    el("conn-status").textContent = store.view.connection;
    el("last-error").textContent = store.view.lastError ?? "";
}
function wireControls() {
    el("btn-start").addEventListener("click", async () => {
        const wf = activeForm?.model.waveformName ?? catalog[0]?.waveform_name;
        if (!wf)
            return;
        const params = activeForm?.model.params() ?? {};
        const state = await guard(api.start(wf, params));
        if (state)
            store.applyAck(state);
    });
    el("btn-pause").addEventListener("click", async () => {
        const state = await guard(api.pause());
        if (state)
            store.applyAck(state);
    });
    el("btn-resume").addEventListener("click", async () => {
        const state = await guard(api.resume());
        if (state)
            store.applyAck(state);
    });
    el("btn-stop").addEventListener("click", async () => {
        const state = await guard(api.stop());
        if (state)
            store.applyAck(state);
    });
    el("btn-switch").addEventListener("click", () => {
        el("catalog-panel").scrollIntoView();
        toast("pick a waveform from the catalog; apply switches the live session");
    });
}
// ---------------------------------------------------------------------------
// schedule editor
const draft = new ScheduleDraft();
function renderSchedule() {
    const box = el("schedule-rows");
    box.textContent = "";
    draft.entries.forEach((entry, i) => {
        const tr = document.createElement("tr");
        const pick = document.createElement("select");
        for (const d of catalog) {
            const o = document.createElement("option");
            o.value = d.waveform_name;
            o.textContent = d.waveform_name;
            pick.appendChild(o);
        }
        pick.value = entry.waveform_id;
        pick.addEventListener("change", () => draft.update(i, { waveform_id: pick.value }));
        const cells = [
            ["on_s", entry.on_s],
            ["off_s", entry.off_s],
            ["repeat", entry.repeat],
        ];
        const tdPick = document.createElement("td");
        tdPick.appendChild(pick);
        tr.appendChild(tdPick);
        for (const [key, value] of cells) {
            const td = document.createElement("td");
            const input = document.createElement("input");
            input.type = "number";
            input.value = String(value);
            input.addEventListener("change", () => draft.update(i, { [key]: Number(input.value) }));
            td.appendChild(input);
            tr.appendChild(td);
        }
        const tdDel = document.createElement("td");
        const del = document.createElement("button");
        del.textContent = "remove";
        del.addEventListener("click", () => {
            draft.remove(i);
            renderSchedule();
        });
        tdDel.appendChild(del);
        tr.appendChild(tdDel);
        box.appendChild(tr);
    });
}
function wireSchedule() {
    el("btn-add-entry").addEventListener("click", () => {
        draft.add(catalog[0]?.waveform_name ?? "baseline");
        renderSchedule();
    });
    el("btn-schedule").addEventListener("click", async () => {
        const problems = draft.problems();
        if (problems.length) {
            toast(problems.join("; "));
            return;
        }
        const out = await guard(api.schedule(draft.entries));
        if (out)
            store.applyAck(out.session);
    });
}
// ---------------------------------------------------------------------------
// run log viewer
async function renderRuns() {
    const runs = await api.runs();
    const list = el("run-list");
    list.textContent = "";
    for (const runId of runs.slice(-20).reverse()) {
        const li = document.createElement("li");
        const btn = document.createElement("button");
        btn.textContent = runId;
        btn.addEventListener("click", async () => {
            const doc = await api.run(runId);
            el("run-detail").textContent = JSON.stringify(doc, null, 2);
        });
        li.appendChild(btn);
        list.appendChild(li);
    }
}
// ---------------------------------------------------------------------------
// boot
function onStream(msg) {
    store.applyStream(msg);
    waterfall.ingest(msg);
    if (msg.kind === "event") {
        const log = el("event-log");
        log.textContent = (JSON.stringify(msg.payload) + "\n" + log.textContent).slice(0, 12000);
    }
    el("dropped-frames").textContent = String(waterfall.dropped);
}
async function boot() {
    wireControls();
    wireSchedule();
    store.subscribe(() => renderControls());
    await renderDevices();
    await renderCatalog();
    await renderRuns();
    store.applyPower(await api.power());
    setInterval(async () => store.applyPower(await api.power().catch(() => store.view.power)), 2000);
    const canvas = el("waterfall");
    const view = new WaterfallView(canvas, waterfall);
    setInterval(() => view.paint(), 250);
    new StreamConnection("/v1/stream", onStream, (status) => store.applyConnection(status));
    store.subscribe((v) => {
        const power = v.power;
        el("power-status").textContent = power
            ? `${(power.battery_fraction * 100).toFixed(1)}% | ${power.estimated_runtime_s.toFixed(0)} s left | ${power.load_watts} W`
            : "unknown";
    });
}
boot().catch((e) => toast(`boot failed: ${e}`));
