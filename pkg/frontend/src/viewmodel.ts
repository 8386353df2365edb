// The explorer's single source of truth. Every displayed value is copied
// from a server response; the view model never simulates transitions
// itself. A what-if preview uses dry-run steps, which the server
// guarantees are mutation-free.

import { ServiceClient } from "./api.js";
import { circularLayout, NodePosition } from "./layout.js";
import type {
  EnabledEdgeInfo,
  ModelDocument,
  MoveRecord,
  RecommendResponse,
  SessionState,
  StepResponse,
} from "./types.js";
import { cocktailKey } from "./types.js";

export interface WhatIfEntry {
  cocktail: string[];
  nextState: string;
  envMove: string;
  costDelta: number[];
  halted: boolean;
}

export interface CostPoint {
  round: number;
  cost: number[];
}

export class ExplorerViewModel {
  model: ModelDocument | null = null;
  layout: NodePosition[] = [];
  session: SessionState | null = null;
  enabledEdges: EnabledEdgeInfo[] = [];
  recommendation: RecommendResponse | null = null;
  costSeries: CostPoint[] = [];
  whatIf: WhatIfEntry[] = [];
  lastError: string | null = null;

  constructor(
    private readonly client: ServiceClient,
    readonly policy: string = "uniform-random",
    readonly seed: number = 0
  ) {}

  get currentState(): string {
    return this.session?.state ?? "";
  }

  get clockValuation(): Record<string, string> {
    return this.session?.valuation ?? {};
  }

  get history(): MoveRecord[] {
    return this.session?.history ?? [];
  }

  get accumulatedCost(): number[] {
    return this.session?.cost ?? [];
  }

  get round(): number {
    return this.session?.round ?? 0;
  }

  get halted(): boolean {
    return this.session?.halted ?? false;
  }

  /** Cocktails the controller may pick this round (the model's menu). */
  get menu(): string[][] {
    return this.model?.cocktail_menu ?? [[]];
  }

  async start(): Promise<void> {
    this.model = await this.client.model();
    this.layout = circularLayout(this.model);
    this.session = await this.client.createSession(this.policy, this.seed);
    this.costSeries = [{ round: this.session.round, cost: this.session.cost }];
    await this.refreshRecommendation();
  }

  /** Re-read the recommendation; the banner mirrors the response exactly. */
  async refreshRecommendation(): Promise<void> {
    if (!this.session) return;
    this.recommendation = await this.client.recommend(this.session.id);
  }

  /** Dry-run every menu cocktail; the server performs no mutation. */
  async computeWhatIf(): Promise<WhatIfEntry[]> {
    if (!this.session || this.halted) {
      this.whatIf = [];
      return this.whatIf;
    }
    const entries: WhatIfEntry[] = [];
    for (const cocktail of this.menu) {
      const preview = await this.client.step(this.session.id, cocktail, true);
      entries.push({
        cocktail,
        nextState: preview.result.state,
        envMove: preview.result.env_move,
        costDelta: preview.result.cost_delta,
        halted: preview.result.halted,
      });
    }
    this.whatIf = entries;
    return entries;
  }

  /** Commit one round with the chosen cocktail. */
  async playRound(cocktail: string[]): Promise<StepResponse | null> {
    if (!this.session) throw new Error("no active session");
    this.lastError = null;
    try {
      const response = await this.client.step(this.session.id, cocktail, false);
      this.session = response.session;
      this.enabledEdges = response.enabled_edges;
      this.costSeries.push({
        round: response.session.round,
        cost: response.session.cost,
      });
      await this.refreshRecommendation();
      return response;
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      return null;
    }
  }

  /** Follow the loaded strategy's recommendation (empty cocktail if none). */
  async playRecommended(): Promise<StepResponse | null> {
    await this.refreshRecommendation();
    const cocktail = this.recommendation?.cocktail ?? [];
    return this.playRound(cocktail);
  }

  async reset(): Promise<void> {
    if (!this.session) return;
    this.session = await this.client.reset(this.session.id);
    this.costSeries = [{ round: this.session.round, cost: this.session.cost }];
    this.enabledEdges = [];
    this.whatIf = [];
    await this.refreshRecommendation();
  }

  /** Banner text; equals the recommend response verbatim. */
  recommendationBanner(): string {
    if (!this.recommendation) return "";
    if (!this.recommendation.loaded) {
      return this.recommendation.message ?? "no strategy loaded";
    }
    const c = this.recommendation.cocktail;
    if (c === null) return "no recommendation at this configuration";
    return c.length ? `recommended: {${cocktailKey(c)}}` : "recommended: no drugs";
  }
}
