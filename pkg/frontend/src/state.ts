// Session state: exactly the data that the outgoing /score request mirrors.
// Every mutation that changes the outgoing config bumps `revision`, which the
// app uses to trigger exactly one (debounced) re-score.

import {
  APPLICATION_PRESETS,
  ApplicationPreset,
  CharacteristicDraft,
  ConfigDoc,
  Kind,
  SCHEMA_VERSION,
  ScoreReport,
  Technology,
  parseConfigDoc,
} from './schema.js';

export interface SessionState {
  technology: Technology;
  application: ApplicationPreset;
  k: number;                 // effective sensitivity (preset default, overridable)
  qs: number;
  characteristics: CharacteristicDraft[];
  report: ScoreReport | null;
  revision: number;          // bumped on every config-affecting change
  nextId: number;
}

export function initialState(): SessionState {
  const preset = APPLICATION_PRESETS[1]; // artistic
  return {
    technology: 'BJ',
    application: preset,
    k: preset.k,
    qs: 1.0,
    characteristics: [],
    report: null,
    revision: 0,
    nextId: 1,
  };
}

function bumped(state: SessionState): SessionState {
  return { ...state, revision: state.revision + 1, report: state.report };
}

export function setTechnology(state: SessionState, technology: Technology): SessionState {
  return bumped({ ...state, technology });
}

export function setApplication(state: SessionState, name: string): SessionState {
  const preset = APPLICATION_PRESETS.find((p) => p.name === name);
  if (!preset) return state;
  return bumped({ ...state, application: preset, k: preset.k });
}

export function setSensitivity(state: SessionState, k: number): SessionState {
  if (!(Number.isFinite(k) && k >= 0 && k <= 1)) return state;
  return bumped({ ...state, k });
}

export function setQualityRatio(state: SessionState, qs: number): SessionState {
  if (!(Number.isFinite(qs) && qs > 0)) return state;
  return bumped({ ...state, qs });
}

export function addCharacteristic(
  state: SessionState,
  kind: Kind,
  dimensions: Record<string, number>,
  epsilon = 0,
  significance = state.application.s,
  label = '',
): SessionState {
  const draft: CharacteristicDraft = {
    id: state.nextId, kind, dimensions, epsilon, significance, label,
  };
  return bumped({
    ...state,
    characteristics: [...state.characteristics, draft],
    nextId: state.nextId + 1,
  });
}

export function editCharacteristic(
  state: SessionState,
  id: number,
  patch: Partial<Omit<CharacteristicDraft, 'id'>>,
): SessionState {
  const characteristics = state.characteristics.map((c) =>
    c.id === id ? { ...c, ...patch, dimensions: { ...(patch.dimensions ?? c.dimensions) } } : c,
  );
  return bumped({ ...state, characteristics });
}

export function removeCharacteristic(state: SessionState, id: number): SessionState {
  return bumped({
    ...state,
    characteristics: state.characteristics.filter((c) => c.id !== id),
  });
}

export function withReport(state: SessionState, report: ScoreReport): SessionState {
  return { ...state, report };
}

// -- config document round trip ------------------------------------------------

export function toConfigDoc(state: SessionState): ConfigDoc {
  return {
    schema_version: SCHEMA_VERSION,
    technology: state.technology,
    application: { name: state.application.name, k: state.k },
    qs: state.qs,
    characteristics: state.characteristics.map((c) => ({
      kind: c.kind,
      dimensions: { ...c.dimensions },
      epsilon: c.epsilon,
      significance: c.significance,
      ...(c.label ? { label: c.label } : {}),
    })),
  };
}

export function loadConfigDoc(
  state: SessionState,
  raw: unknown,
): { state?: SessionState; error?: string } {
  const { doc, error } = parseConfigDoc(raw);
  if (error || !doc) return { error: error ?? 'invalid configuration' };
  const preset =
    APPLICATION_PRESETS.find((p) => p.name === doc.application?.name) ??
    APPLICATION_PRESETS[1];
  let next: SessionState = {
    ...initialState(),
    technology: doc.technology,
    application: preset,
    k: doc.application?.k ?? preset.k,
    qs: doc.qs ?? 1.0,
    revision: state.revision + 1,
  };
  for (const c of doc.characteristics) {
    next = {
      ...next,
      characteristics: [
        ...next.characteristics,
        {
          id: next.nextId,
          kind: c.kind,
          dimensions: { ...c.dimensions },
          epsilon: c.epsilon ?? 0,
          significance: c.significance ?? 1,
          label: c.label ?? '',
        },
      ],
      nextId: next.nextId + 1,
    };
  }
  next.revision = state.revision + 1;
  return { state: next };
}

// -- view model ------------------------------------------------------------------

export interface ScorePanelView {
  text: string;
  percentText: string;
  red: boolean;       // warning background when success probability < 50%
  pending: boolean;
}

export function scorePanelView(report: ScoreReport | null): ScorePanelView {
  if (!report) {
    return { text: 'no score yet', percentText: '-', red: false, pending: true };
  }
  // displayed number comes verbatim from the service; only formatting here
  const pct = report.overall_percent;
  return {
    text: `printability ${pct.toFixed(2)}%`,
    percentText: `${pct.toFixed(2)}%`,
    red: report.overall < 0.5,     // strict: exactly 50% is not warned
    pending: false,
  };
}

export function survivalByNode(
  state: SessionState,
  report: ScoreReport | null,
): Map<number, number> {
  const out = new Map<number, number>();
  if (!report || report.characteristics.length !== state.characteristics.length) {
    return out;
  }
  state.characteristics.forEach((c, i) => {
    out.set(c.id, report.characteristics[i].survival);
  });
  return out;
}

export interface TreeGroup {
  kind: Kind;
  nodes: CharacteristicDraft[];
}

export function characteristicTree(state: SessionState): TreeGroup[] {
  const groups = new Map<Kind, CharacteristicDraft[]>();
  for (const c of state.characteristics) {
    const bucket = groups.get(c.kind) ?? [];
    bucket.push(c);
    groups.set(c.kind, bucket);
  }
  return [...groups.entries()].map(([kind, nodes]) => ({ kind, nodes }));
}
