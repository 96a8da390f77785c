export { CsvError, loadFields, parseFieldCsv, type FieldGrid } from "./csv.js";
export {
  parseSummaryFile,
  parseSummaryLine,
  SummaryError,
  type SummaryRecord,
  type SummarySeries,
} from "./summary.js";
export { contourRings, type ContourLine } from "./contours.js";
export { DEFAULT_LEVELS, renderFields, renderFieldsSvg, type FigureSpec } from "./fields.js";
export { renderConvergence, renderConvergenceSvg, type XAxis } from "./converge.js";
export { main } from "./cli.js";
