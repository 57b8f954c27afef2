/** Shapes of the REST payloads served by the pipeline service. */

export interface ScoreComponents {
  spatial_iou: number;
  weighted_spatial_iou: number;
  spatiotemporal_iou: number;
  combined: number;
  n_samples: number;
  category: string;
  sample_index: number;
  resampled: boolean;
}

export interface RunSummary {
  run_id: string;
  status: string;
  caption: string;
  created_at: string | null;
  parent_run: string | null;
  intervention: { kind: string; payload: unknown } | null;
  frame_count: number;
  scores: ScoreComponents | null;
  error: string | null;
  children: string[];
}

export interface SampleEntry {
  sample_index: number;
  status: string;
  stop_reason?: string;
  executions?: number;
  critiques?: number;
  refinements?: number;
  lineage?: [number, number, number];
  error?: string;
}

export interface RunDetail extends RunSummary {
  samples: SampleEntry[];
  selected_sample: number | null;
  scores_detail: { best: ScoreComponents; samples: ScoreComponents[] } | null;
}

export interface ParameterRow {
  name: string;
  value: unknown;
  type: string;
}

export type InterventionKind = "caption_edit" | "parameter_patch" | "source_edit";
