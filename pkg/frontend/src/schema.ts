// Wire types shared with the scoring service, plus client-side validation.
// The client never computes probabilities; it only shapes and checks the
// configuration document before it goes to POST /api/v1/score.

export const SCHEMA_VERSION = 1;

export type Technology = 'FDM' | 'BJ' | 'MJ';
export const TECHNOLOGIES: Technology[] = ['FDM', 'BJ', 'MJ'];

export type Kind =
  | 'hole'
  | 'pin'
  | 'supported_wall'
  | 'unsupported_wall'
  | 'bridge'
  | 'thin_part'
  | 'overhang'
  | 'embossed'
  | 'engraved';

export const KINDS: Kind[] = [
  'hole', 'pin', 'supported_wall', 'unsupported_wall', 'bridge',
  'thin_part', 'overhang', 'embossed', 'engraved',
];

// Example dimensions shown next to each category in the editor.
export const DIMENSION_HINTS: Record<Kind, { dims: string[]; example: string }> = {
  hole: { dims: ['diameter'], example: 'diameter in mm, e.g. 3.0' },
  pin: { dims: ['diameter'], example: 'diameter in mm, e.g. 2.5' },
  supported_wall: { dims: ['thickness'], example: 'thickness in mm, e.g. 4.0' },
  unsupported_wall: { dims: ['thickness'], example: 'thickness in mm, e.g. 3.5' },
  bridge: { dims: ['length'], example: 'length in mm, e.g. 8.0 (FDM only)' },
  thin_part: { dims: ['thickness'], example: 'thickness in mm, e.g. 1.5' },
  overhang: { dims: ['stress'], example: 'max self-weight stress in N/m^2, e.g. 1.8e4 (BJ); angle in degrees for FDM' },
  embossed: { dims: ['width', 'height'], example: 'width x height in mm, e.g. 1.0 x 1.0' },
  engraved: { dims: ['width', 'depth'], example: 'width x depth in mm, e.g. 1.0 x 1.0' },
};

export interface CharacteristicDraft {
  id: number;              // client-side handle for tree edits
  kind: Kind;
  dimensions: Record<string, number>;
  epsilon: number;
  significance: number;
  label?: string;
}

export interface ApplicationPreset {
  name: string;
  k: number;               // default sensitivity for every global characteristic
  s: number;               // default significance for new characteristics
}

export const APPLICATION_PRESETS: ApplicationPreset[] = [
  { name: 'mechanical', k: 0.5, s: 1.0 },
  { name: 'artistic', k: 0.9, s: 1.0 },
  { name: 'bio-engineering', k: 0.1, s: 1.0 },
];

export interface ConfigDoc {
  schema_version: number;
  technology: Technology;
  application: { name: string; k: number };
  qs?: number;
  areas?: { mesh: number; cad: number };
  characteristics: Array<{
    kind: Kind;
    dimensions: Record<string, number>;
    epsilon: number;
    significance: number;
    label?: string;
  }>;
}

export interface ScoreReport {
  overall: number;
  overall_percent: number;
  product_survival: number;
  global: { survival: number; failure_prob: number };
  characteristics: Array<{
    kind: string;
    label: string;
    dimensions: Record<string, number>;
    survival: number;
    failure_prob: number;
  }>;
  warnings: string[];
}

export function validateCharacteristic(
  draft: Pick<CharacteristicDraft, 'kind' | 'dimensions' | 'epsilon' | 'significance'>,
): string[] {
  const errors: string[] = [];
  if (!KINDS.includes(draft.kind)) {
    errors.push(`unknown characteristic kind '${draft.kind}'`);
    return errors;
  }
  const expected = DIMENSION_HINTS[draft.kind].dims;
  const names = Object.keys(draft.dimensions);
  if (names.length === 0) errors.push('at least one dimension is required');
  for (const [name, value] of Object.entries(draft.dimensions)) {
    if (draft.kind !== 'overhang' && !expected.includes(name)) {
      errors.push(`unexpected dimension '${name}' for ${draft.kind}`);
    }
    if (!(Number.isFinite(value) && value > 0)) {
      errors.push(`dimension '${name}' must be a positive number`);
    }
  }
  if (!(Number.isFinite(draft.epsilon) && draft.epsilon >= 0)) {
    errors.push('epsilon must be >= 0');
  }
  if (!(Number.isFinite(draft.significance) && draft.significance > 0 && draft.significance <= 1)) {
    errors.push('significance must be in (0, 1]');
  }
  return errors;
}

export function parseConfigDoc(raw: unknown): { doc?: ConfigDoc; error?: string } {
  if (typeof raw !== 'object' || raw === null) return { error: 'not a JSON object' };
  const doc = raw as Record<string, unknown>;
  const version = doc.schema_version ?? SCHEMA_VERSION;
  if (version !== SCHEMA_VERSION) {
    return { error: `unsupported schema_version ${String(version)} (expected ${SCHEMA_VERSION})` };
  }
  if (!TECHNOLOGIES.includes(doc.technology as Technology)) {
    return { error: `unknown technology '${String(doc.technology)}'` };
  }
  const chars = (doc.characteristics ?? []) as ConfigDoc['characteristics'];
  if (!Array.isArray(chars)) return { error: 'characteristics must be an array' };
  for (let i = 0; i < chars.length; i++) {
    const c = chars[i];
    const errors = validateCharacteristic({
      kind: c.kind,
      dimensions: c.dimensions ?? {},
      epsilon: c.epsilon ?? 0,
      significance: c.significance ?? 1,
    });
    if (errors.length) return { error: `characteristics[${i}]: ${errors[0]}` };
  }
  return { doc: raw as ConfigDoc };
}
