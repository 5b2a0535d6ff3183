/** Rating controls: one fieldset of five radio buttons per category.
 *
 * The radios are the only way to produce a value, and they are built
 * exclusively from the 0..4 scale served by the API, so the UI cannot
 * emit an out-of-range score.
 */

import { MAX_SCORE, MIN_SCORE } from "./session.js";

export interface RatingControl {
  readonly category: string;
  readonly element: HTMLFieldSetElement;
  value(): number | null;
  setValue(value: number): void;
  clear(): void;
  showError(message: string): void;
  clearError(): void;
}

export function buildRatingControl(
  doc: Document,
  category: string,
  labels: readonly string[],
  onChange: (category: string, value: number) => void,
): RatingControl {
  const fieldset = doc.createElement("fieldset");
  fieldset.className = "rating";
  fieldset.dataset.category = category;

  const legend = doc.createElement("legend");
  legend.textContent = category;
  fieldset.appendChild(legend);

  const options = doc.createElement("div");
  options.className = "rating-options";
  fieldset.appendChild(options);

  const inputs: HTMLInputElement[] = [];
  for (let value = MIN_SCORE; value <= MAX_SCORE; value++) {
    const id = `rating-${category}-${value}`;
    const wrapper = doc.createElement("label");
    wrapper.className = "rating-option";
    wrapper.htmlFor = id;

    const input = doc.createElement("input");
    input.type = "radio";
    input.id = id;
    input.name = `rating-${category}`;
    input.value = String(value);
    input.addEventListener("change", () => {
      if (input.checked) {
        onChange(category, value);
      }
    });
    inputs.push(input);

    const text = doc.createElement("span");
    text.textContent = `${value} · ${labels[value] ?? ""}`;

    wrapper.appendChild(input);
    wrapper.appendChild(text);
    options.appendChild(wrapper);
  }

  const error = doc.createElement("p");
  error.className = "rating-error";
  error.hidden = true;
  fieldset.appendChild(error);

  return {
    category,
    element: fieldset,
    value(): number | null {
      const checked = inputs.find((input) => input.checked);
      if (!checked) return null;
      const parsed = Number(checked.value);
      return Number.isInteger(parsed) && parsed >= MIN_SCORE && parsed <= MAX_SCORE
        ? parsed
        : null;
    },
    setValue(value: number): void {
      const input = inputs[value - MIN_SCORE];
      if (input) {
        input.checked = true;
      }
    },
    clear(): void {
      for (const input of inputs) {
        input.checked = false;
      }
      error.hidden = true;
    },
    showError(message: string): void {
      error.textContent = message;
      error.hidden = false;
      fieldset.classList.add("rating-invalid");
    },
    clearError(): void {
      error.hidden = true;
      fieldset.classList.remove("rating-invalid");
    },
  };
}
