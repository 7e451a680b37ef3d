/** Wire types of the control-service API (see docs/data-formats.md). */

export type Category = "narrowband" | "wideband";

export interface ParameterDef {
  name: string;
  kind: "integer" | "float" | "enumerated";
  units: string;
  range?: [number, number] | null;
  values?: (string | number)[] | null;
  default: string | number;
}

export interface Descriptor {
  schema_version: number;
  waveform_name: string;
  category: Category;
  execution_mode: "direct_graph" | "composed_base_chain";
  parameters: ParameterDef[];
  generator_binding?: string;
}

export interface Widget {
  label: string;
  kind: string; // int_input | float_input | dropdown | (unknown -> fallback)
  units: string;
  default: string | number;
  range: [number, number] | null;
  options: (string | number)[] | null;
}

export interface FormSpec {
  waveform_name: string;
  widgets: Widget[];
}

export interface DeviceInfo {
  device_id: string;
  transport: string;
  min_frequency: number;
  max_frequency: number;
  max_sample_rate: number;
  role: "unassigned" | "transmitter" | "monitor";
}

export type SessionStateName = "Idle" | "Running" | "Paused" | "Stopped";

export interface SessionState {
  state: SessionStateName;
  active_waveform: string | null;
  stream_clock: number;
}

export interface SwitchEvent {
  from_waveform: string | null;
  to_waveform: string;
  previous_end_index: number;
  next_start_index: number;
  previous_end_s: number;
  next_start_s: number;
  gap_delta_s: number;
}

export interface PowerStatus {
  battery_fraction: number;
  estimated_runtime_s: number;
  load_watts: number;
}

export interface SpectrumPayload {
  timestamp: number;
  window_id: number;
  bin_spacing: number;
  center_offset: number;
  psd_b64: string;
}

export interface StreamMessage {
  seq: number;
  kind: "spectrum" | "metrics" | "event";
  payload: Record<string, unknown>;
}

export interface Violation {
  code: string;
  field: string;
  message: string;
}

export interface ApiErrorBody {
  error: {
    code: string;
    detail: string;
    report?: { ok: boolean; violations: Violation[] };
  };
}

export interface ScheduleEntryDraft {
  waveform_id: string;
  params: Record<string, string | number>;
  on_s: number;
  off_s: number;
  repeat: number;
}
