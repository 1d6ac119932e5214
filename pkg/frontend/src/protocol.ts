/**
 * Wire protocol shared with the pipeline: line-delimited JSON requests and
 * responses. A response is either {text, sentences?} or {error}.
 */

export const PROTOCOL_NAME = 'sgec-backend/1';

export interface BackendRequest {
  id: string;
  audio?: string;
  text?: string;
  prompt?: string;
}

export interface SentenceSpan {
  start: number;
  end: number;
  text: string;
}

export interface BackendSuccess {
  text: string;
  sentences?: SentenceSpan[];
}

export interface BackendFailure {
  error: string;
}

export type BackendResponse = BackendSuccess | BackendFailure;

export interface Handshake {
  protocol: typeof PROTOCOL_NAME;
  concurrency: number;
  descriptor: string;
  port?: number;
}

export function isFailure(resp: BackendResponse): resp is BackendFailure {
  return 'error' in resp;
}

function optionalString(value: unknown, field: string): string | undefined {
  if (value === undefined || value === null) return undefined;
  if (typeof value !== 'string') throw new Error(`invalid ${field}: expected a string`);
  return value;
}

/** Validate a decoded request object; throws with a reason on bad shapes. */
export function validateRequest(raw: unknown): BackendRequest {
  if (typeof raw !== 'object' || raw === null || Array.isArray(raw)) {
    throw new Error('request must be a JSON object');
  }
  const obj = raw as Record<string, unknown>;
  if (typeof obj.id !== 'string' || obj.id === '') {
    throw new Error('missing or invalid id');
  }
  return {
    id: obj.id,
    audio: optionalString(obj.audio, 'audio'),
    text: optionalString(obj.text, 'text'),
    prompt: optionalString(obj.prompt, 'prompt'),
  };
}

/** Parse one request line into a request or a protocol-level error response. */
export function parseRequestLine(line: string): BackendRequest | BackendFailure {
  let decoded: unknown;
  try {
    decoded = JSON.parse(line);
  } catch {
    return { error: 'malformed request: not valid JSON' };
  }
  try {
    return validateRequest(decoded);
  } catch (err) {
    return { error: `malformed request: ${(err as Error).message}` };
  }
}

export function serializeResponse(resp: BackendResponse): string {
  return JSON.stringify(resp);
}
