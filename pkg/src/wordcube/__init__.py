"""Attribute-hypercube co-occurrence models and spectral word embeddings."""

from .model import (CapacityError, CoocMatrix, ModelConfig, PairKernel,
                    all_attribute_vectors, all_tertiary_vectors,
                    all_unigram_probs, build_m, build_pmi, build_tertiary_m,
                    pair_kernel, sample_config, tertiary_kernel,
                    unigram_prob, word_attributes, word_index)
from .spectral import (EigenSystem, LogKernelCoeffs, PmiStructure,
                       SpectrumDensity, analytic_eigensystem, first_order_eigs,
                       kernel_eigs, numeric_eigensystem, pmi_coefficients,
                       pmi_structure, spectrum_density,
                       tertiary_perturbation_eigs)
from .embed import (AccuracyCurve, AnalogyFamily, AnalogyQuad, Embedding,
                    EvalPolicy, accuracy_vs_k, all_model_families, embed,
                    evaluate_quads, model_analogy_tasks, top1_accuracy)
from .perturb import (NoiseSpec, PruneSpec, SubsampleError, SubsampleSpec,
                      apply_noise, breakdown_k, gram_spectrum,
                      prune_attribute_pairs, prune_corpus_pairs,
                      subsample_vocab)
from .corpus import (AnalogyDataset, AnalogyParseError, CoocCounts,
                     Vocabulary, build_vocab, cooc_to_m, count_cooc,
                     parse_analogy_file, tokenize)
from .harness import (ExperimentResult, ExperimentSpec, FormatError, SpecError,
                      derive_seed, emit_figure_data, figure_spec,
                      load_eigensystem, load_matrix, parse_spec, run_experiment,
                      run_figure, save_eigensystem, save_matrix,
                      restrict_families)

__version__ = "0.1.0"
