//! Documentation categories and data-science lifecycle stages used to code
//! markdown cells.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocCategory {
    Process,
    Headline,
    Result,
    BackgroundKnowledge,
    Reason,
    Todo,
    Reference,
    MetaInformation,
    Summary,
}

impl DocCategory {
    pub const ALL: [DocCategory; 9] = [
        DocCategory::Process,
        DocCategory::Headline,
        DocCategory::Result,
        DocCategory::BackgroundKnowledge,
        DocCategory::Reason,
        DocCategory::Todo,
        DocCategory::Reference,
        DocCategory::MetaInformation,
        DocCategory::Summary,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    EnvironmentConfiguration,
    DataPreparationExploration,
    FeatureEngineeringSelection,
    ModelBuildingSelection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    LibraryLoading,
    DataLoading,
    DataPreparation,
    ExploratoryDataAnalysis,
    DataCleaning,
    FeatureEngineering,
    FeatureTransformation,
    FeatureSelection,
    ModelBuilding,
    DataSubSamplingTrainTestSplitting,
    ModelTraining,
    ModelParameterTuning,
    ModelValidationAssembling,
}

impl Task {
    pub const ALL: [Task; 13] = [
        Task::LibraryLoading,
        Task::DataLoading,
        Task::DataPreparation,
        Task::ExploratoryDataAnalysis,
        Task::DataCleaning,
        Task::FeatureEngineering,
        Task::FeatureTransformation,
        Task::FeatureSelection,
        Task::ModelBuilding,
        Task::DataSubSamplingTrainTestSplitting,
        Task::ModelTraining,
        Task::ModelParameterTuning,
        Task::ModelValidationAssembling,
    ];

    pub fn stage(self) -> Stage {
        use Task::*;
        match self {
            LibraryLoading | DataLoading => Stage::EnvironmentConfiguration,
            DataPreparation | ExploratoryDataAnalysis | DataCleaning => Stage::DataPreparationExploration,
            FeatureEngineering | FeatureTransformation | FeatureSelection => Stage::FeatureEngineeringSelection,
            ModelBuilding | DataSubSamplingTrainTestSplitting | ModelTraining | ModelParameterTuning
            | ModelValidationAssembling => Stage::ModelBuildingSelection,
        }
    }
}

/// A task together with its stage; construction enforces the grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLabel {
    stage: Stage,
    task: Task,
}

impl StageLabel {
    pub fn new(task: Task) -> Self {
        StageLabel { stage: task.stage(), task }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn task(&self) -> Task {
        self.task
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_task_counts() {
        let count = |s: Stage| Task::ALL.iter().filter(|t| t.stage() == s).count();
        assert_eq!(count(Stage::EnvironmentConfiguration), 2);
        assert_eq!(count(Stage::DataPreparationExploration), 3);
        assert_eq!(count(Stage::FeatureEngineeringSelection), 3);
        assert_eq!(count(Stage::ModelBuildingSelection), 5);
        assert_eq!(StageLabel::new(Task::ModelTraining).stage(), Stage::ModelBuildingSelection);
    }
}
