/** The six graph refinement widget forms and their action payloads. */

import type { WidgetActionWire } from "./types.js";

export type WidgetName =
  | "add-node"
  | "add-link"
  | "remove-node"
  | "remove-link"
  | "edit-node-label"
  | "edit-link-label";

export interface WidgetField {
  name: string;
  label: string;
  /** prefilled from the current selection rather than typed */
  fromSelection?: "node" | "edge";
}

export interface WidgetForm {
  widget: WidgetName;
  title: string;
  fields: WidgetField[];
}

export const WIDGET_FORMS: Record<WidgetName, WidgetForm> = {
  "add-node": {
    widget: "add-node",
    title: "Add Node",
    fields: [{ name: "label", label: "Node name" }],
  },
  "add-link": {
    widget: "add-link",
    title: "Add Link",
    fields: [
      { name: "source", label: "From node", fromSelection: "node" },
      { name: "target", label: "To node", fromSelection: "node" },
      { name: "label", label: "Link label" },
    ],
  },
  "remove-node": {
    widget: "remove-node",
    title: "Remove Node",
    fields: [{ name: "id", label: "Node", fromSelection: "node" }],
  },
  "remove-link": {
    widget: "remove-link",
    title: "Remove Link",
    fields: [
      { name: "source", label: "From node", fromSelection: "edge" },
      { name: "target", label: "To node", fromSelection: "edge" },
      { name: "label", label: "Link label", fromSelection: "edge" },
    ],
  },
  "edit-node-label": {
    widget: "edit-node-label",
    title: "Edit Node Label",
    fields: [
      { name: "id", label: "Node", fromSelection: "node" },
      { name: "new_label", label: "New label" },
    ],
  },
  "edit-link-label": {
    widget: "edit-link-label",
    title: "Edit Link Label",
    fields: [
      { name: "source", label: "From node", fromSelection: "edge" },
      { name: "target", label: "To node", fromSelection: "edge" },
      { name: "old_label", label: "Old label", fromSelection: "edge" },
      { name: "new_label", label: "New label" },
    ],
  },
};

/** Build the wire action for a submitted form, validating required fields. */
export function actionFromForm(widget: WidgetName, values: Record<string, string>): WidgetActionWire {
  const form = WIDGET_FORMS[widget];
  for (const field of form.fields) {
    if (!values[field.name] || !values[field.name].trim()) {
      throw new Error(`${form.title}: ${field.label} is required`);
    }
  }
  switch (widget) {
    case "add-node":
      return { kind: "add_node", label: values.label };
    case "add-link":
      return { kind: "add_link", source: values.source, target: values.target, label: values.label };
    case "remove-node":
      return { kind: "remove_node", id: values.id };
    case "remove-link":
      return { kind: "remove_link", source: values.source, target: values.target, label: values.label };
    case "edit-node-label":
      return { kind: "edit_node_label", id: values.id, new_label: values.new_label };
    case "edit-link-label":
      return {
        kind: "edit_link_label",
        source: values.source,
        target: values.target,
        old_label: values.old_label,
        new_label: values.new_label,
      };
  }
}
