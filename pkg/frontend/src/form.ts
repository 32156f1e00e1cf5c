/** Form state for the 13 schema-driven inputs.
 *
 * Client-side validation is deliberately weaker than the server's: it
 * only refuses input it cannot encode at all (blank fields, non-numeric
 * text, categories outside the schema list). Everything it accepts is
 * sent verbatim; the service stays the authority.
 */

import type { AttributeDescriptor, SchemaDoc } from "./api";

export interface FieldState {
  descriptor: AttributeDescriptor;
  raw: string;
  value: number | null;
  error: string | null; // client-side parse problem
  serverError: string | null; // inline fault from the last response
}

export interface FormState {
  order: string[];
  fields: Map<string, FieldState>;
}

const DISPLAY_NAMES: Record<string, string> = {
  reason_for_absence: "Reason for absence",
  transportation_expense: "Transportation expense",
  distance_to_work: "Distance to work",
  age: "Age",
  work_load_avg_per_day: "Work load (avg/day)",
  education: "Education",
  son: "Children",
  social_drinker: "Social drinker",
  social_smoker: "Social smoker",
  pet: "Pets",
  weight: "Weight",
  height: "Height",
  body_mass_index: "Body mass index",
};

export function displayName(attribute: string): string {
  const known = DISPLAY_NAMES[attribute];
  if (known) return known;
  const spaced = attribute.replace(/_/g, " ");
  return spaced.charAt(0).toUpperCase() + spaced.slice(1);
}

export function rangeHint(descriptor: AttributeDescriptor): string | null {
  if (!descriptor.value_range) return null;
  const [lo, hi] = descriptor.value_range;
  return `observed ${lo} to ${hi}`;
}

export function buildForm(schema: SchemaDoc): FormState {
  const fields = new Map<string, FieldState>();
  for (const descriptor of schema.attributes) {
    fields.set(descriptor.name, {
      descriptor,
      raw: "",
      value: null,
      error: "required",
      serverError: null,
    });
  }
  return { order: schema.attributes.map((a) => a.name), fields };
}

function parseField(descriptor: AttributeDescriptor, raw: string): {
  value: number | null;
  error: string | null;
} {
  const text = raw.trim();
  if (text === "") return { value: null, error: "required" };
  const value = Number(text);
  if (!Number.isFinite(value)) return { value: null, error: "must be a number" };
  if (descriptor.kind === "categorical") {
    const categories = descriptor.categories ?? [];
    if (!Number.isInteger(value) || !categories.includes(value)) {
      return { value: null, error: "not one of the listed values" };
    }
  }
  return { value, error: null };
}

export function setFieldValue(state: FormState, name: string, raw: string): void {
  const field = state.fields.get(name);
  if (!field) throw new Error(`unknown attribute ${name}`);
  const parsed = parseField(field.descriptor, raw);
  field.raw = raw;
  field.value = parsed.value;
  field.error = parsed.error;
  field.serverError = null; // editing clears the stale inline fault
}

export function allValid(state: FormState): boolean {
  for (const field of state.fields.values()) {
    if (field.error !== null) return false;
  }
  return true;
}

export function payload(state: FormState): Record<string, number> {
  const doc: Record<string, number> = {};
  for (const [name, field] of state.fields) {
    if (field.value === null) throw new Error(`field ${name} is not valid`);
    doc[name] = field.value;
  }
  return doc;
}

export function applyServerFaults(
  state: FormState,
  fields: { name: string; message: string }[],
): string[] {
  const unmatched: string[] = [];
  for (const fault of fields) {
    const field = state.fields.get(fault.name);
    if (field) {
      field.serverError = fault.message;
    } else {
      unmatched.push(`${fault.name}: ${fault.message}`);
    }
  }
  return unmatched;
}

export function clearServerFaults(state: FormState): void {
  for (const field of state.fields.values()) field.serverError = null;
}
