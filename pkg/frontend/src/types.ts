// Frame wire schema as emitted by the twin service. Field names are fixed;
// the state/control blocks are scenario-specific bags.

export interface ComponentReading {
  id: string;
  beta: number;
  p: number;
  band: string;
  rgb: [number, number, number];
  method: string;
}

export interface Frame {
  session: string;
  t: number;
  clock: number;
  components: ComponentReading[];
  state: Record<string, unknown>;
  control: Record<string, unknown>;
}

export class FrameSchemaError extends Error {}

function isRgb(v: unknown): v is [number, number, number] {
  return Array.isArray(v) && v.length === 3 && v.every((c) => Number.isInteger(c));
}

/** Validate one decoded frame object against the wire schema. */
export function parseFrame(raw: unknown): Frame {
  if (typeof raw !== "object" || raw === null) {
    throw new FrameSchemaError("frame is not an object");
  }
  const f = raw as Record<string, unknown>;
  if (typeof f.session !== "string" || typeof f.t !== "number"
      || typeof f.clock !== "number" || !Array.isArray(f.components)
      || typeof f.state !== "object" || typeof f.control !== "object") {
    throw new FrameSchemaError("frame is missing required fields");
  }
  for (const c of f.components as Record<string, unknown>[]) {
    if (typeof c.id !== "string" || typeof c.beta !== "number"
        || typeof c.p !== "number" || typeof c.band !== "string"
        || !isRgb(c.rgb) || typeof c.method !== "string") {
      throw new FrameSchemaError(`malformed component reading: ${JSON.stringify(c)}`);
    }
  }
  return raw as Frame;
}

export function parseFrameLine(line: string): Frame {
  let decoded: unknown;
  try {
    decoded = JSON.parse(line);
  } catch (e) {
    throw new FrameSchemaError(`frame is not valid JSON: ${e}`);
  }
  return parseFrame(decoded);
}
