from .teacher import (MODALITIES, LAYER_POLICIES, TeacherEmbedding, apply_layer_policy,
                      load_teacher, save_teacher, read_teacher_array, SyntheticTeacher)
from .loss import (TeacherWarning, DistillTarget, Projection,
                   align, distill_loss, combined_loss, select_rvq, distill_objective)


__all__ = [
    "MODALITIES", "LAYER_POLICIES", "TeacherEmbedding", "apply_layer_policy",
    "load_teacher", "save_teacher", "read_teacher_array", "SyntheticTeacher",
    "TeacherWarning", "DistillTarget", "Projection",
    "align", "distill_loss", "combined_loss", "select_rvq", "distill_objective",
]
