// Wire types for the chakit service (HTTP/JSON contract, version 1).

export interface ModelEdge {
  from: string;
  to: string;
  inhibitors?: string[];
  guard?: Record<string, number>;
}

export interface ModelState {
  id: string;
  labels?: string[];
  cost?: number[];
}

export interface ModelDocument {
  format: string;
  name: string;
  description: string;
  timed: boolean;
  initial: string;
  drugs: { id: string; cost?: number[] }[];
  states: ModelState[];
  edges: ModelEdge[];
  cocktail_menu: string[][];
  clocks?: string[];
  invariants?: Record<string, Record<string, number>>;
  rates?: Record<string, Record<string, Record<string, string>>>;
}

export interface MoveRecord {
  round: number;
  cocktail: string[];
  env_move: string;
  state_after: string;
  cost_delta: number[];
}

export interface SessionState {
  id: string;
  round: number;
  state: string;
  valuation: Record<string, string>;
  active_cocktail: string[];
  cost: number[];
  halted: boolean;
  policy: string;
  seed: number;
  history: MoveRecord[];
}

export interface EnabledEdgeInfo {
  index: number;
  to: string;
  enabled: boolean;
  guard?: string;
  inhibitors?: string[];
}

export interface StepResult {
  state: string;
  round: number;
  halted: boolean;
  env_move: string;
  cost_delta: number[];
}

export interface StepResponse {
  version: number;
  dry_run: boolean;
  result: StepResult;
  enabled_edges: EnabledEdgeInfo[];
  session: SessionState;
}

export interface RecommendResponse {
  version: number;
  loaded: boolean;
  cocktail: string[] | null;
  message?: string;
}

export interface QuotientNode {
  id: number;
  state: string;
  cocktail: string[];
  region: number[][];
  turn: string;
  labels: string[];
}

export interface QuotientDocument {
  initial: number;
  scale: number;
  clocks: string[];
  bounds: Record<string, number>;
  menu: string[][];
  nodes: QuotientNode[];
  edges: { from: number; to: number; kind: string; payload: number }[];
}

export interface ServiceError {
  version: number;
  error: { code: string; message: string };
}

export function cocktailKey(cocktail: string[]): string {
  return [...cocktail].sort().join("+");
}
