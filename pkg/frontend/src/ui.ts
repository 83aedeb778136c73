// DOM layer: renders the selectors, the characteristic tree with per-node
// survivals, and the score panel; keeps all numbers verbatim from the service.

import { ScoreClient, ScoreOutcome } from './api.js';
import {
  APPLICATION_PRESETS,
  DIMENSION_HINTS,
  KINDS,
  Kind,
  TECHNOLOGIES,
  validateCharacteristic,
} from './schema.js';
import {
  SessionState,
  addCharacteristic,
  characteristicTree,
  initialState,
  loadConfigDoc,
  removeCharacteristic,
  scorePanelView,
  setApplication,
  setQualityRatio,
  setSensitivity,
  setTechnology,
  survivalByNode,
  toConfigDoc,
  withReport,
} from './state.js';

export class App {
  state: SessionState = initialState();
  private lastScoredRevision = -1;

  constructor(private root: HTMLElement, private client: ScoreClient) {}

  start(): void {
    this.render();
    this.maybeRescore();
  }

  private update(next: SessionState): void {
    const changed = next.revision !== this.state.revision;
    this.state = next;
    this.render();
    if (changed) this.maybeRescore();
  }

  private maybeRescore(): void {
    const revision = this.state.revision;
    if (revision === this.lastScoredRevision) return;
    this.lastScoredRevision = revision;
    this.client.scoreDebounced(toConfigDoc(this.state), (outcome) => {
      this.applyOutcome(outcome);
    });
  }

  applyOutcome(outcome: ScoreOutcome): void {
    if (outcome.stale) return;
    if (outcome.error) {
      this.setStatus(outcome.error);
      return;
    }
    if (outcome.report) {
      this.setStatus('');
      this.state = withReport(this.state, outcome.report);
      this.render();
    }
  }

  private setStatus(message: string): void {
    const el = this.root.querySelector<HTMLElement>('#status');
    if (el) el.textContent = message;
  }

  // -- rendering ------------------------------------------------------------

  private render(): void {
    const view = scorePanelView(this.state.report);
    const survivals = survivalByNode(this.state, this.state.report);
    const tree = characteristicTree(this.state);

    this.root.innerHTML = `
      <header>
        <h1>Printability calculator</h1>
        <p class="hint">Scores come live from the scoring service; nothing is computed in the browser.</p>
      </header>
      <section class="controls">
        <label>Technology
          <select id="technology">${TECHNOLOGIES.map(
            (t) => `<option ${t === this.state.technology ? 'selected' : ''}>${t}</option>`,
          ).join('')}</select>
        </label>
        <label>Application
          <select id="application">${APPLICATION_PRESETS.map(
            (p) => `<option ${p.name === this.state.application.name ? 'selected' : ''}>${p.name}</option>`,
          ).join('')}</select>
        </label>
        <label>Sensitivity k
          <input id="k" type="number" min="0" max="1" step="0.1" value="${this.state.k}">
        </label>
        <label>Mesh/CAD area ratio QS
          <input id="qs" type="number" min="0.01" max="1.5" step="0.01" value="${this.state.qs}">
        </label>
        <span class="actions">
          <button id="save">Save config</button>
          <button id="load">Load config</button>
          <input id="load-file" type="file" accept=".json" hidden>
        </span>
      </section>
      <section class="editor">
        <h2>Add part characteristic</h2>
        <label>Kind
          <select id="new-kind">${KINDS.map((k) => `<option>${k}</option>`).join('')}</select>
        </label>
        <label>Dimensions <input id="new-dims" placeholder="e.g. 1.5 or 1.0x2.0"></label>
        <label>Predicted error &epsilon; (mm) <input id="new-eps" type="number" step="0.01" value="0"></label>
        <label>Significance s <input id="new-s" type="number" min="0.01" max="1" step="0.05"
          value="${this.state.application.s}"></label>
        <button id="add">Add</button>
        <div id="dim-hint" class="hint"></div>
        <div id="form-errors" class="errors"></div>
      </section>
      <section class="tree">
        <h2>Part characteristics</h2>
        ${tree.length === 0 ? '<p class="hint">none yet</p>' : ''}
        <ul>
          ${tree
            .map(
              (group) => `
            <li><strong>${group.kind}</strong>
              <ul>
                ${group.nodes
                  .map((node) => {
                    const survival = survivals.get(node.id);
                    const dims = Object.entries(node.dimensions)
                      .map(([k, v]) => `${k}=${v}`)
                      .join(', ');
                    return `<li data-id="${node.id}">
                      ${node.label ? `<em>${node.label}</em> ` : ''}${dims},
                      &epsilon;=${node.epsilon}, s=${node.significance}
                      <span class="survival">${
                        survival === undefined ? '...' : `1-P_F = ${survival.toFixed(4)}`
                      }</span>
                      <button class="remove" data-id="${node.id}">remove</button>
                    </li>`;
                  })
                  .join('')}
              </ul>
            </li>`,
            )
            .join('')}
        </ul>
      </section>
      <footer>
        <div id="status" class="errors"></div>
        <div id="score-panel" class="score ${view.red ? 'warn' : ''}">
          <span id="score-text">${view.text}</span>
        </div>
      </footer>
    `;
    this.bind();
  }

  private bind(): void {
    const q = <T extends HTMLElement>(sel: string) => this.root.querySelector<T>(sel)!;

    q<HTMLSelectElement>('#technology').onchange = (e) =>
      this.update(setTechnology(this.state, (e.target as HTMLSelectElement).value as never));
    q<HTMLSelectElement>('#application').onchange = (e) =>
      this.update(setApplication(this.state, (e.target as HTMLSelectElement).value));
    q<HTMLInputElement>('#k').onchange = (e) =>
      this.update(setSensitivity(this.state, Number((e.target as HTMLInputElement).value)));
    q<HTMLInputElement>('#qs').onchange = (e) =>
      this.update(setQualityRatio(this.state, Number((e.target as HTMLInputElement).value)));

    const kindSelect = q<HTMLSelectElement>('#new-kind');
    const hint = q<HTMLElement>('#dim-hint');
    const showHint = () => {
      hint.textContent = DIMENSION_HINTS[kindSelect.value as Kind].example;
    };
    kindSelect.onchange = showHint;
    showHint();

    q<HTMLButtonElement>('#add').onclick = () => this.addFromForm();
    this.root.querySelectorAll<HTMLButtonElement>('button.remove').forEach((btn) => {
      btn.onclick = () => this.update(removeCharacteristic(this.state, Number(btn.dataset.id)));
    });

    q<HTMLButtonElement>('#save').onclick = () => this.saveConfig();
    const fileInput = q<HTMLInputElement>('#load-file');
    q<HTMLButtonElement>('#load').onclick = () => fileInput.click();
    fileInput.onchange = () => {
      const file = fileInput.files?.[0];
      if (file) void this.loadConfigFile(file);
    };
  }

  private addFromForm(): void {
    const q = <T extends HTMLElement>(sel: string) => this.root.querySelector<T>(sel)!;
    const kind = q<HTMLSelectElement>('#new-kind').value as Kind;
    const dimsRaw = q<HTMLInputElement>('#new-dims').value.trim();
    const epsilon = Number(q<HTMLInputElement>('#new-eps').value);
    const significance = Number(q<HTMLInputElement>('#new-s').value);

    const names = DIMENSION_HINTS[kind].dims;
    const values = dimsRaw.split(/[x,\s]+/).filter(Boolean).map(Number);
    const dimensions: Record<string, number> = {};
    names.forEach((name, i) => {
      dimensions[name] = values[i] ?? values[0] ?? NaN;
    });

    const errors = validateCharacteristic({ kind, dimensions, epsilon, significance });
    const errorBox = q<HTMLElement>('#form-errors');
    if (errors.length) {
      errorBox.textContent = errors.join('; ');
      return; // invalid fields never reach the service
    }
    errorBox.textContent = '';
    this.update(addCharacteristic(this.state, kind, dimensions, epsilon, significance));
  }

  private saveConfig(): void {
    const doc = toConfigDoc(this.state);
    const blob = new Blob([JSON.stringify(doc, null, 2)], { type: 'application/json' });
    const a = document.createElement('a');
    a.href = URL.createObjectURL(blob);
    a.download = 'printability-config.json';
    a.click();
    URL.revokeObjectURL(a.href);
  }

  private async loadConfigFile(file: File): Promise<void> {
    let raw: unknown;
    try {
      raw = JSON.parse(await file.text());
    } catch {
      this.setStatus('config file is not valid JSON');
      return;
    }
    const { state, error } = loadConfigDoc(this.state, raw);
    if (error || !state) {
      this.setStatus(`cannot load config: ${error}`);
      return;
    }
    this.update(state);
  }
}
